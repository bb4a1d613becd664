#include "absvo/warp.hpp"

#include <algorithm>
#include <cmath>

#include "absvo/errors.hpp"

namespace absvo {

BilinearTap bilinear_tap(int height, int width, double x, double y) {
  BilinearTap tap;
  const double max_x = width - 1;
  const double max_y = height - 1;
  if (!(x >= 0.0 && x <= max_x)) tap.clamped_x = true;
  if (!(y >= 0.0 && y <= max_y)) tap.clamped_y = true;
  // NaN falls through to the lower clamp.
  const double cx = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, max_x);
  const double cy = std::isnan(y) ? 0.0 : std::clamp(y, 0.0, max_y);
  tap.x0 = std::min(static_cast<int>(std::floor(cx)), width - 2);
  tap.y0 = std::min(static_cast<int>(std::floor(cy)), height - 2);
  tap.fx = cx - tap.x0;
  tap.fy = cy - tap.y0;
  tap.in_bounds = !tap.clamped_x && !tap.clamped_y;
  return tap;
}

Synthesized bilinear_sample(const ImageBuffer& img, const CoordinateMap& coords) {
  if (coords.x.size() != static_cast<std::size_t>(coords.height) * coords.width ||
      coords.y.size() != coords.x.size())
    throw DimensionMismatch("bilinear_sample: malformed coordinate map");
  if (img.height() < 2 || img.width() < 2)
    throw DimensionMismatch("bilinear_sample: source must be at least 2x2");

  const int h = coords.height, w = coords.width, nc = img.channels();
  Synthesized out{ImageBuffer(h, w, nc), Mask(static_cast<std::size_t>(h) * w, 0), {}};
  out.jacobian.height = h;
  out.jacobian.width = w;
  out.jacobian.channels = nc;
  out.jacobian.d_dx.assign(out.image.size(), 0.0);
  out.jacobian.d_dy.assign(out.image.size(), 0.0);

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const BilinearTap t = bilinear_tap(img.height(), img.width(), coords.x[i], coords.y[i]);
      out.mask[i] = t.in_bounds ? 1 : 0;
      for (int ch = 0; ch < nc; ++ch) {
        const double v00 = img.at(t.y0, t.x0, ch);
        const double v01 = img.at(t.y0, t.x0 + 1, ch);
        const double v10 = img.at(t.y0 + 1, t.x0, ch);
        const double v11 = img.at(t.y0 + 1, t.x0 + 1, ch);
        const double top = (1.0 - t.fx) * v00 + t.fx * v01;
        const double bottom = (1.0 - t.fx) * v10 + t.fx * v11;
        const std::size_t o = i * nc + ch;
        out.image.values()[o] = (1.0 - t.fy) * top + t.fy * bottom;
        // Clamped axes have zero derivative.
        if (!t.clamped_x)
          out.jacobian.d_dx[o] = (1.0 - t.fy) * (v01 - v00) + t.fy * (v11 - v10);
        if (!t.clamped_y) out.jacobian.d_dy[o] = bottom - top;
      }
    }
  }
  return out;
}

CoordinateMap stereo_coordinate_map(const DisparityMap& disp, StereoDirection direction) {
  const int h = disp.height(), w = disp.width();
  CoordinateMap map(h, w);
  const double sign = direction == StereoDirection::LeftFromRight ? -1.0 : 1.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      map.x[i] = c + sign * disp[i];
      map.y[i] = r;
      map.valid[i] = (map.x[i] >= 0.0 && map.x[i] <= w - 1) ? 1 : 0;
    }
  return map;
}

CoordinateMap temporal_coordinate_map(const Intrinsics& k, const DepthMap& depth,
                                      const RigidTransform& transform) {
  const int h = depth.height(), w = depth.width();
  CoordinateMap map(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const double d = depth[i];
      if (!(d > 0.0)) continue;
      const Point3 p = transform.apply(Point3((c - k.cx) * d / k.fx, (r - k.cy) * d / k.fy, d));
      if (!(p.z() > kEpsilonZ)) continue;
      map.x[i] = k.fx * p.x() / p.z() + k.cx;
      map.y[i] = k.fy * p.y() / p.z() + k.cy;
      map.valid[i] =
          (map.x[i] >= 0.0 && map.x[i] <= w - 1 && map.y[i] >= 0.0 && map.y[i] <= h - 1) ? 1 : 0;
    }
  return map;
}

Synthesized synthesize(const ImageBuffer& img, const CoordinateMap& coords) {
  if (img.height() != coords.height || img.width() != coords.width)
    throw DimensionMismatch("synthesize: coordinate map and image sizes differ");
  Synthesized out = bilinear_sample(img, coords);
  for (std::size_t i = 0; i < out.mask.size(); ++i)
    out.mask[i] = (out.mask[i] && coords.valid[i]) ? 1 : 0;
  return out;
}

}  // namespace absvo
