#include "absvo/losses.hpp"

#include <cmath>

#include "absvo/errors.hpp"
#include "absvo/warp.hpp"

namespace absvo {

namespace {

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

void require_same_shape(const ScalarMap& a, const ScalarMap& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionMismatch(std::string(what) + ": map shapes differ");
}

// Collapses dL/d(sample) into dL/dx and dL/dy per output pixel.
void coordinate_gradient(const ImageBuffer& grad_synth, const SampleJacobian& jac,
                         std::vector<double>& gx, std::vector<double>& gy) {
  const std::size_t n = grad_synth.pixel_count();
  const int nc = grad_synth.channels();
  gx.assign(n, 0.0);
  gy.assign(n, 0.0);
  auto g = grad_synth.values();
  for (std::size_t i = 0; i < n; ++i)
    for (int ch = 0; ch < nc; ++ch) {
      const std::size_t k = i * nc + ch;
      gx[i] += g[k] * jac.d_dx[k];
      gy[i] += g[k] * jac.d_dy[k];
    }
}

// One direction of the disparity check: `own` compared with `other` sampled
// along `own`'s shift. Accumulates gradients w.r.t. both pixel disparities.
double disparity_term(const DisparityMap& own, const DisparityMap& other, StereoDirection dir,
                      ScalarMap& grad_own, ScalarMap& grad_other) {
  const int h = own.height(), w = own.width();
  const double inv_w = 1.0 / w;
  const CoordinateMap coords = stereo_coordinate_map(own, dir);
  const double shift_sign = dir == StereoDirection::LeftFromRight ? -1.0 : 1.0;

  std::size_t n = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) n += coords.valid[i] ? 1 : 0;
  if (n == 0) throw EmptyMask("disparity_consistency_loss: no valid pixels");
  const double norm = 1.0 / static_cast<double>(n);

  double sum = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!coords.valid[i]) continue;
    const BilinearTap t = bilinear_tap(h, w, coords.x[i], coords.y[i]);
    const int r0 = t.y0, c0 = t.x0;
    const double v00 = other(r0, c0), v01 = other(r0, c0 + 1);
    const double v10 = other(r0 + 1, c0), v11 = other(r0 + 1, c0 + 1);
    const double sampled =
        inv_w * (t.w00() * v00 + t.w01() * v01 + t.w10() * v10 + t.w11() * v11);
    const double ds_dx = inv_w * ((1.0 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
    const double resid = own[i] * inv_w - sampled;
    sum += std::abs(resid);

    const double e = sign(resid) * norm;
    grad_own[i] += e * inv_w - e * ds_dx * shift_sign;
    const double scale = -e * inv_w;
    grad_other(r0, c0) += scale * t.w00();
    grad_other(r0, c0 + 1) += scale * t.w01();
    grad_other(r0 + 1, c0) += scale * t.w10();
    grad_other(r0 + 1, c0 + 1) += scale * t.w11();
  }
  return sum * norm;
}

// Photometric term for pixels of `image_src` re-rendered from `image_dst`
// through depth_src and transform. Accumulates into grad_depth and grad_t.
double temporal_photo_term(const ImageBuffer& image_src, const ImageBuffer& image_dst,
                           const DepthMap& depth_src, const Intrinsics& k,
                           const RigidTransform& t, double lambda_s, ScalarMap& grad_depth,
                           TransformGradient& grad_t) {
  const CoordinateMap coords = temporal_coordinate_map(k, depth_src, t);
  const Synthesized syn = synthesize(image_dst, coords);
  const PhotometricLoss pho = photometric_loss(image_src, syn.image, syn.mask, lambda_s);

  std::vector<double> gx, gy;
  coordinate_gradient(pho.grad_synth, syn.jacobian, gx, gy);

  const int h = depth_src.height(), w = depth_src.width();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (!syn.mask[i] || (gx[i] == 0.0 && gy[i] == 0.0)) continue;
      const Vec3 ray((c - k.cx) / k.fx, (r - k.cy) / k.fy, 1.0);
      const Vec3 x = depth_src[i] * ray;
      const Vec3 p = t.rotation * x + t.translation;
      const double iz = 1.0 / p.z();
      const Vec3 gp(gx[i] * k.fx * iz, gy[i] * k.fy * iz,
                    -(gx[i] * k.fx * p.x() + gy[i] * k.fy * p.y()) * iz * iz);
      grad_t.rotation += gp * x.transpose();
      grad_t.translation += gp;
      grad_depth[i] += gp.dot(t.rotation * ray);
    }
  return pho.value;
}

// Points of frame src moved by t and compared with depth_dst at their
// reprojection. Returns the mean per-point L1 residual.
double registration_term(const DepthMap& depth_src, const DepthMap& depth_dst,
                         const Intrinsics& k, const RigidTransform& t, ScalarMap& grad_src,
                         ScalarMap& grad_dst, TransformGradient& grad_t) {
  const int h = depth_src.height(), w = depth_src.width();
  const int hd = depth_dst.height(), wd = depth_dst.width();

  struct Hit {
    std::size_t i;
    Vec3 ray, x, p;
    BilinearTap tap;
  };
  std::vector<Hit> hits;
  hits.reserve(depth_src.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const Vec3 ray((c - k.cx) / k.fx, (r - k.cy) / k.fy, 1.0);
      const Vec3 x = depth_src[i] * ray;
      const Vec3 p = t.rotation * x + t.translation;
      if (!(p.z() > kEpsilonZ)) continue;
      const double u = k.fx * p.x() / p.z() + k.cx;
      const double v = k.fy * p.y() / p.z() + k.cy;
      const BilinearTap tap = bilinear_tap(hd, wd, u, v);
      if (!tap.in_bounds) continue;
      hits.push_back({i, ray, x, p, tap});
    }
  if (hits.empty()) throw EmptyMask("geometric_registration_loss: no valid pixels");
  const double norm = 1.0 / static_cast<double>(hits.size());

  double sum = 0.0;
  for (const Hit& hit : hits) {
    const BilinearTap& tp = hit.tap;
    const int r0 = tp.y0, c0 = tp.x0;
    const double d00 = depth_dst(r0, c0), d01 = depth_dst(r0, c0 + 1);
    const double d10 = depth_dst(r0 + 1, c0), d11 = depth_dst(r0 + 1, c0 + 1);
    const double i00 = 1.0 / d00, i01 = 1.0 / d01, i10 = 1.0 / d10, i11 = 1.0 / d11;
    const double inv = tp.w00() * i00 + tp.w01() * i01 + tp.w10() * i10 + tp.w11() * i11;
    const double d_hat = 1.0 / inv;
    const double dinv_du = (1.0 - tp.fy) * (i01 - i00) + tp.fy * (i11 - i10);
    const double dinv_dv = (1.0 - tp.fx) * (i10 - i00) + tp.fx * (i11 - i01);
    const double dd_du = -d_hat * d_hat * dinv_du;
    const double dd_dv = -d_hat * d_hat * dinv_dv;

    const Vec3& p = hit.p;
    const double iz = 1.0 / p.z();
    const double qx = p.x() * iz, qy = p.y() * iz;
    // P' - D_hat K⁻¹(u, v, 1) = (z' - D_hat) * (qx, qy, 1).
    const double e = p.z() - d_hat;
    const double m = std::abs(qx) + std::abs(qy) + 1.0;
    sum += std::abs(e) * m;

    const double s = sign(e) * norm;
    const double ae = std::abs(e) * norm;
    const double g_qx = ae * sign(qx) - s * m * dd_du * k.fx;
    const double g_qy = ae * sign(qy) - s * m * dd_dv * k.fy;
    const Vec3 gp(g_qx * iz, g_qy * iz, s * m - (g_qx * p.x() + g_qy * p.y()) * iz * iz);

    grad_t.rotation += gp * hit.x.transpose();
    grad_t.translation += gp;
    grad_src[hit.i] += gp.dot(t.rotation * hit.ray);

    const double gd = -s * m * d_hat * d_hat;
    grad_dst(r0, c0) += gd * tp.w00() * i00 * i00;
    grad_dst(r0, c0 + 1) += gd * tp.w01() * i01 * i01;
    grad_dst(r0 + 1, c0) += gd * tp.w10() * i10 * i10;
    grad_dst(r0 + 1, c0 + 1) += gd * tp.w11() * i11 * i11;
  }
  return sum * norm;
}

}  // namespace

TransformGradient pull_back_through_inverse(const RigidTransform& t, const TransformGradient& g) {
  // T⁻¹ = (Rᵀ, -Rᵀ t).
  TransformGradient out;
  out.rotation = g.rotation.transpose() - t.translation * g.translation.transpose();
  out.translation = -(t.rotation * g.translation);
  return out;
}

TransformGradient pull_back_through_right_camera(const TransformGradient& g, double baseline) {
  TransformGradient out;
  out.rotation = g.rotation + g.translation * Vec3(baseline, 0.0, 0.0).transpose();
  out.translation = g.translation;
  return out;
}

DisparityMap depth_to_disparity_map(const StereoRig& rig, const DepthMap& depth) {
  DisparityMap out(depth.height(), depth.width());
  for (std::size_t i = 0; i < depth.size(); ++i) out[i] = depth_to_disparity_px(rig, depth[i]);
  return out;
}

DisparityLoss disparity_consistency_loss(const DisparityMap& d_left, const DisparityMap& d_right) {
  require_same_shape(d_left, d_right, "disparity_consistency_loss");
  if (d_left.height() < 2 || d_left.width() < 2)
    throw DimensionMismatch("disparity_consistency_loss: maps must be at least 2x2");
  DisparityLoss out;
  out.grad_left = ScalarMap(d_left.height(), d_left.width());
  out.grad_right = ScalarMap(d_left.height(), d_left.width());
  out.left_term = disparity_term(d_left, d_right, StereoDirection::LeftFromRight, out.grad_left,
                                 out.grad_right);
  out.right_term = disparity_term(d_right, d_left, StereoDirection::RightFromLeft,
                                  out.grad_right, out.grad_left);
  out.value = out.left_term + out.right_term;
  return out;
}

PoseLoss pose_consistency_loss(const Pose6DoF& left, const Pose6DoF& right, double lambda_p,
                               double lambda_o) {
  PoseLoss out;
  const auto l = left.to_array();
  const auto r = right.to_array();
  for (int i = 0; i < 6; ++i) {
    const double weight = i < 3 ? lambda_p : lambda_o;
    const double d = l[i] - r[i];
    out.value += weight * std::abs(d);
    out.grad_left[i] = weight * sign(d);
    out.grad_right[i] = -weight * sign(d);
  }
  return out;
}

GeometricLoss geometric_registration_loss(const DepthMap& depth_k, const DepthMap& depth_k1,
                                          const Intrinsics& k, const RigidTransform& t) {
  require_same_shape(depth_k, depth_k1, "geometric_registration_loss");
  if (depth_k.height() < 2 || depth_k.width() < 2)
    throw DimensionMismatch("geometric_registration_loss: maps must be at least 2x2");
  depth_k.validate();
  depth_k1.validate();

  GeometricLoss out;
  out.grad_depth_k = ScalarMap(depth_k.height(), depth_k.width());
  out.grad_depth_k1 = ScalarMap(depth_k.height(), depth_k.width());
  out.forward_term = registration_term(depth_k, depth_k1, k, t, out.grad_depth_k,
                                       out.grad_depth_k1, out.grad_transform);
  const RigidTransform t_inv = t.inverse();
  TransformGradient g_inv;
  out.backward_term =
      registration_term(depth_k1, depth_k, k, t_inv, out.grad_depth_k1, out.grad_depth_k, g_inv);
  out.grad_transform += pull_back_through_inverse(t, g_inv);
  out.value = out.forward_term + out.backward_term;
  return out;
}

std::array<double, 6> geometric_pose_gradient(const GeometricLoss& loss, const Pose6DoF& pose) {
  return pose_gradient(pose, loss.grad_transform.rotation, loss.grad_transform.translation);
}

StereoPhotometricLoss stereo_photometric_loss(const ImageBuffer& left, const ImageBuffer& right,
                                              const DepthMap& depth_left,
                                              const DepthMap& depth_right, const StereoRig& rig,
                                              double lambda_s) {
  if (!left.same_shape(right)) throw DimensionMismatch("stereo_photometric_loss: image shapes differ");
  if (!depth_left.same_shape(left) || !depth_right.same_shape(left))
    throw DimensionMismatch("stereo_photometric_loss: depth and image sizes differ");

  StereoPhotometricLoss out;
  out.grad_depth_left = ScalarMap(left.height(), left.width());
  out.grad_depth_right = ScalarMap(left.height(), left.width());
  std::vector<double> gx, gy;

  // dx/dD = sign * d(B f / D)/dD = -sign * disparity / D.
  auto one_side = [&](const ImageBuffer& own, const ImageBuffer& other, const DepthMap& depth,
                      StereoDirection dir, ScalarMap& grad) {
    const DisparityMap disp = depth_to_disparity_map(rig, depth);
    const Synthesized syn = synthesize(other, stereo_coordinate_map(disp, dir));
    const PhotometricLoss pho = photometric_loss(own, syn.image, syn.mask, lambda_s);
    coordinate_gradient(pho.grad_synth, syn.jacobian, gx, gy);
    const double shift_sign = dir == StereoDirection::LeftFromRight ? -1.0 : 1.0;
    for (std::size_t i = 0; i < disp.size(); ++i)
      if (syn.mask[i]) grad[i] += gx[i] * shift_sign * (-disp[i] / depth[i]);
    return pho.value;
  };
  out.left_term = one_side(left, right, depth_left, StereoDirection::LeftFromRight,
                           out.grad_depth_left);
  out.right_term = one_side(right, left, depth_right, StereoDirection::RightFromLeft,
                            out.grad_depth_right);
  return out;
}

TemporalPhotometricLoss temporal_photometric_loss(const ImageBuffer& image_k,
                                                  const ImageBuffer& image_k1,
                                                  const DepthMap& depth_k,
                                                  const DepthMap& depth_k1, const Intrinsics& k,
                                                  const RigidTransform& t, double lambda_s) {
  if (!image_k.same_shape(image_k1))
    throw DimensionMismatch("temporal_photometric_loss: image shapes differ");
  TemporalPhotometricLoss out;
  if (depth_k.size() > 0) {
    if (!depth_k.same_shape(image_k))
      throw DimensionMismatch("temporal_photometric_loss: depth and image sizes differ");
    out.grad_depth_k = ScalarMap(depth_k.height(), depth_k.width());
    out.forward_term = temporal_photo_term(image_k, image_k1, depth_k, k, t, lambda_s,
                                           out.grad_depth_k, out.grad_transform);
  }
  if (depth_k1.size() > 0) {
    if (!depth_k1.same_shape(image_k1))
      throw DimensionMismatch("temporal_photometric_loss: depth and image sizes differ");
    out.grad_depth_k1 = ScalarMap(depth_k1.height(), depth_k1.width());
    TransformGradient g_inv;
    out.backward_term = temporal_photo_term(image_k1, image_k, depth_k1, k, t.inverse(),
                                            lambda_s, out.grad_depth_k1, g_inv);
    out.grad_transform += pull_back_through_inverse(t, g_inv);
  }
  return out;
}

}  // namespace absvo
