#pragma once

#include "absvo/geometry.hpp"
#include "absvo/image.hpp"

namespace absvo {

/// Bilinear cell for a sampling position. Coordinates are clamped to the
/// image; `in_bounds` records whether clamping was needed. For x == width-1
/// the cell is (width-2, width-1) with fx == 1, so lattice points are exact.
struct BilinearTap {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
  bool clamped_x = false;
  bool clamped_y = false;
  bool in_bounds = true;

  double w00() const { return (1.0 - fx) * (1.0 - fy); }
  double w01() const { return fx * (1.0 - fy); }
  double w10() const { return (1.0 - fx) * fy; }
  double w11() const { return fx * fy; }
};

/// Requires height, width >= 2.
BilinearTap bilinear_tap(int height, int width, double x, double y);

/// Image sampled through a coordinate map. mask marks pixels whose
/// coordinates were valid and inside the source; other pixels carry the
/// border-clamped value and must not feed a loss.
struct Synthesized {
  ImageBuffer image;
  Mask mask;
  SampleJacobian jacobian;
};

/// Differentiable bilinear sampling ("spatial transformer").
Synthesized bilinear_sample(const ImageBuffer& img, const CoordinateMap& coords);

enum class StereoDirection {
  LeftFromRight,  // left pixel (r, c) reads the right image at c - d
  RightFromLeft,  // right pixel (r, c) reads the left image at c + d
};

CoordinateMap stereo_coordinate_map(const DisparityMap& disp, StereoDirection direction);

/// Projective transfer p' = K T D K⁻¹ p. Pixels whose transformed depth is
/// <= kEpsilonZ or whose projection leaves the image are invalid.
CoordinateMap temporal_coordinate_map(const Intrinsics& k, const DepthMap& depth,
                                      const RigidTransform& transform);

/// Sampling restricted to coords.valid.
Synthesized synthesize(const ImageBuffer& img, const CoordinateMap& coords);

}  // namespace absvo
