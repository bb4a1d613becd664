#include <doctest.h>

#include <cmath>
#include <random>

#include "absvo/errors.hpp"
#include "absvo/losses.hpp"
#include "absvo/synthworld.hpp"
#include "absvo/warp.hpp"
#include "support.hpp"

using namespace absvo;

namespace {

CoordinateMap single(double x, double y) {
  CoordinateMap m(1, 1);
  m.x[0] = x;
  m.y[0] = y;
  m.valid[0] = 1;
  return m;
}

double mean_abs_valid(const ImageBuffer& a, const ImageBuffer& b, const Mask& mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    for (int ch = 0; ch < a.channels(); ++ch) {
      sum += std::abs(a.values()[i * a.channels() + ch] - b.values()[i * a.channels() + ch]);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("warp") {

TEST_CASE("bilinear sample is exact at lattice points") {
  const ImageBuffer img = testing::smooth_image(12, 10);
  const Synthesized s = bilinear_sample(img, single(3, 7));
  CHECK(s.image.at(0, 0) == img.at(7, 3));
  CHECK(s.mask[0] == 1);
  // Lattice Jacobian is the forward difference of the cell containing the point.
  CHECK(s.jacobian.d_dx[0] == doctest::Approx(img.at(7, 4) - img.at(7, 3)));
  CHECK(s.jacobian.d_dy[0] == doctest::Approx(img.at(8, 3) - img.at(7, 3)));
}

TEST_CASE("bilinear midpoint averages neighbours") {
  ImageBuffer img(2, 2, 1, 0.0);
  img.at(0, 0) = 0.2;
  img.at(0, 1) = 0.6;
  const Synthesized s = bilinear_sample(img, single(0.5, 0.0));
  CHECK(s.image.at(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("bilinear Jacobian matches central differences") {
  const ImageBuffer img = testing::smooth_image(32, 48, 3);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(1.0, 46.0), uy(1.0, 30.0);
  const double h = 1e-4;
  for (int i = 0; i < 1000; ++i) {
    double x = ux(rng), y = uy(rng);
    // Keep the stencil inside one cell; the interpolant is only C0 across cells.
    x = std::floor(x) + std::clamp(x - std::floor(x), 2 * h, 1 - 2 * h);
    y = std::floor(y) + std::clamp(y - std::floor(y), 2 * h, 1 - 2 * h);
    const Synthesized s = bilinear_sample(img, single(x, y));
    const Synthesized xp = bilinear_sample(img, single(x + h, y));
    const Synthesized xm = bilinear_sample(img, single(x - h, y));
    const Synthesized yp = bilinear_sample(img, single(x, y + h));
    const Synthesized ym = bilinear_sample(img, single(x, y - h));
    for (int ch = 0; ch < 3; ++ch) {
      CHECK(std::abs(s.jacobian.d_dx[ch] - (xp.image.at(0, 0, ch) - xm.image.at(0, 0, ch)) / (2 * h)) <= 1e-6);
      CHECK(std::abs(s.jacobian.d_dy[ch] - (yp.image.at(0, 0, ch) - ym.image.at(0, 0, ch)) / (2 * h)) <= 1e-6);
      const double lo = std::min({img.at(int(y), int(x), ch), img.at(int(y), int(x) + 1, ch),
                                  img.at(int(y) + 1, int(x), ch), img.at(int(y) + 1, int(x) + 1, ch)});
      const double hi = std::max({img.at(int(y), int(x), ch), img.at(int(y), int(x) + 1, ch),
                                  img.at(int(y) + 1, int(x), ch), img.at(int(y) + 1, int(x) + 1, ch)});
      CHECK(s.image.at(0, 0, ch) >= lo - 1e-15);
      CHECK(s.image.at(0, 0, ch) <= hi + 1e-15);
    }
  }
}

TEST_CASE("out-of-bounds samples are clamped and masked") {
  const ImageBuffer img = testing::smooth_image(8, 8);
  const Synthesized s = bilinear_sample(img, single(-0.5, 3.0));
  CHECK(s.mask[0] == 0);
  CHECK(s.image.at(0, 0) == img.at(3, 0));
  CHECK(s.jacobian.d_dx[0] == 0.0);
  const Synthesized t = bilinear_sample(img, single(7.0, 7.0));
  CHECK(t.mask[0] == 1);
  CHECK(t.image.at(0, 0) == img.at(7, 7));
}

TEST_CASE("identity coordinates reproduce the image exactly") {
  const ImageBuffer img = testing::smooth_image(9, 13, 3);
  const Synthesized s = synthesize(img, CoordinateMap::identity(9, 13));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(s.image.values()[i] == img.values()[i]);
  CHECK(count_valid(s.mask) == 9u * 13u);
}

TEST_CASE("stereo coordinate maps") {
  const DisparityMap zero(4, 8, 0.0);
  for (auto dir : {StereoDirection::LeftFromRight, StereoDirection::RightFromLeft}) {
    const CoordinateMap m = stereo_coordinate_map(zero, dir);
    CHECK(count_valid(m.valid) == 32u);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 8; ++c) {
        CHECK(m.x[r * 8 + c] == c);
        CHECK(m.y[r * 8 + c] == r);
      }
  }
  const DisparityMap two(4, 8, 2.0);
  const CoordinateMap l = stereo_coordinate_map(two, StereoDirection::LeftFromRight);
  const CoordinateMap r = stereo_coordinate_map(two, StereoDirection::RightFromLeft);
  for (int row = 0; row < 4; ++row)
    for (int c = 0; c < 8; ++c) {
      const std::size_t i = row * 8 + c;
      CHECK(l.x[i] == c - 2.0);
      CHECK(r.x[i] == c + 2.0);
      // Left view loses its two leftmost columns; the right view its two rightmost.
      CHECK(bool(l.valid[i]) == (c >= 2));
      CHECK(bool(r.valid[i]) == (c <= 5));
    }
}

TEST_CASE("horizontal ramp shifted by one pixel") {
  ImageBuffer ramp(3, 10, 1);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 10; ++c) ramp.at(r, c) = 0.1 * c;
  const Synthesized s = synthesize(ramp, stereo_coordinate_map(DisparityMap(3, 10, 1.0), StereoDirection::LeftFromRight));
  for (int r = 0; r < 3; ++r)
    for (int c = 1; c < 10; ++c) CHECK(s.image.at(r, c) == doctest::Approx(0.1 * (c - 1)).epsilon(1e-14));
}

TEST_CASE("temporal coordinate maps") {
  const Intrinsics k{48, 48, 31.5, 15.5};
  const DepthMap plane(32, 64, 10.0);
  const CoordinateMap id = temporal_coordinate_map(k, plane, RigidTransform::identity());
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) {
      CHECK(id.x[r * 64 + c] == doctest::Approx(c).epsilon(1e-14));
      CHECK(id.y[r * 64 + c] == doctest::Approx(r).epsilon(1e-14));
    }

  RigidTransform shift;
  shift.translation = Vec3(0.25, 0, 0);
  const CoordinateMap m = temporal_coordinate_map(k, plane, shift);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int c = static_cast<int>(i % 64);
    CHECK(m.x[i] - c == doctest::Approx(48 * 0.25 / 10.0).epsilon(1e-12));
  }

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform t = testing::random_transform(rng, 0.05, 0.3);
    DepthMap depth(32, 64);
    std::uniform_real_distribution<double> z(5, 15);
    for (double& v : depth.values()) v = z(rng);
    const CoordinateMap cm = temporal_coordinate_map(k, depth, t);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 64; ++c) {
        const double d = depth(r, c);
        const double X = (c - k.cx) / k.fx * d, Y = (r - k.cy) / k.fy * d, Z = d;
        const double px = t.rotation(0, 0) * X + t.rotation(0, 1) * Y + t.rotation(0, 2) * Z + t.translation(0);
        const double py = t.rotation(1, 0) * X + t.rotation(1, 1) * Y + t.rotation(1, 2) * Z + t.translation(1);
        const double pz = t.rotation(2, 0) * X + t.rotation(2, 1) * Y + t.rotation(2, 2) * Z + t.translation(2);
        const double u = k.fx * px / pz + k.cx, v = k.fy * py / pz + k.cy;
        const std::size_t i = static_cast<std::size_t>(r) * 64 + c;
        CHECK(std::abs(cm.x[i] - u) <= 1e-9);
        CHECK(std::abs(cm.y[i] - v) <= 1e-9);
        CHECK(bool(cm.valid[i]) == (u >= 0 && u <= 63 && v >= 0 && v <= 31));
      }
  }
}

TEST_CASE("points behind the camera are masked") {
  const Intrinsics k{48, 48, 31.5, 15.5};
  RigidTransform back;
  back.translation = Vec3(0, 0, -20);
  const CoordinateMap m = temporal_coordinate_map(k, DepthMap(32, 64, 10.0), back);
  CHECK(count_valid(m.valid) == 0u);
}

TEST_CASE("stereo warp of a rendered plane reproduces the left view") {
  const SceneSpec spec = testing::small_scene();
  const RenderedFrame f = render_frame(spec, RigidTransform::identity());
  const DisparityMap disp = depth_to_disparity_map(spec.rig, f.gt_depth_left);
  const Synthesized s = synthesize(f.right, stereo_coordinate_map(disp, StereoDirection::LeftFromRight));
  CHECK(mean_abs_valid(f.left, s.image, s.mask) <= 1e-3);
}

TEST_CASE("warp by T then by T inverse on a smooth image") {
  const Intrinsics k{48, 48, 31.5, 15.5};
  const ImageBuffer img = testing::smooth_image(32, 64);
  const DepthMap depth(32, 64, 10.0);
  Pose6DoF p;
  p.translation = Vec3(0.1, -0.05, 0.2);
  p.rotation = Vec3(0.002, -0.003, 0.004);
  const RigidTransform t = euler_to_matrix(p);
  // Depth of the plane seen from the moved camera, so the inverse warp is consistent.
  const CoordinateMap fwd = temporal_coordinate_map(k, depth, t);
  const Synthesized once = synthesize(img, fwd);
  DepthMap moved(32, 64);
  const Vec3 n = t.rotation.col(2);  // plane normal (0,0,1) in the moved frame
  const double offset = 10.0 + n.dot(t.translation);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 64; ++c) {
      const Vec3 ray((c - k.cx) / k.fx, (r - k.cy) / k.fy, 1.0);
      moved(r, c) = offset / n.dot(ray);
    }
  const Synthesized twice = synthesize(once.image, temporal_coordinate_map(k, moved, t.inverse()));
  Mask both(twice.mask.size(), 0);
  const CoordinateMap back = temporal_coordinate_map(k, moved, t.inverse());
  for (std::size_t i = 0; i < both.size(); ++i) {
    if (!twice.mask[i]) continue;
    const BilinearTap tap = bilinear_tap(32, 64, back.x[i], back.y[i]);
    const std::size_t j00 = static_cast<std::size_t>(tap.y0) * 64 + tap.x0;
    both[i] = once.mask[j00] && once.mask[j00 + 1] && once.mask[j00 + 64] && once.mask[j00 + 65];
  }
  CHECK(count_valid(both) > 1000u);
  CHECK(mean_abs_valid(img, twice.image, both) <= 5e-3);
}

TEST_CASE("sampling needs a 2x2 source") {
  CHECK_THROWS_AS(bilinear_sample(ImageBuffer(1, 5, 1), CoordinateMap::identity(1, 5)), DimensionMismatch);
}

}  // TEST_SUITE
