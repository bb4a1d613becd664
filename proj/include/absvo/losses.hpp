#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "absvo/geometry.hpp"
#include "absvo/image.hpp"

namespace absvo {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct LossWeights {
  double lambda_s = 0.85;  // SSIM share of each photometric term
  double lambda_p = 1.0;   // left/right position consistency
  double lambda_o = 1.0;   // left/right orientation consistency
  double w_spatial_photo = 1.0;
  double w_disp = 1.0;
  double w_pose = 1.0;
  double w_temporal_photo = 1.0;
  double w_geo = 1.0;

  void validate() const;
};

/// Per-pixel, per-channel SSIM over 3x3 mean-filter windows clipped to the
/// image. Values lie in [-1, 1].
ImageBuffer ssim(const ImageBuffer& a, const ImageBuffer& b);

struct PhotometricLoss {
  double value = 0.0;
  double ssim_term = 0.0;  // mean (1 - SSIM) / 2
  double l1_term = 0.0;    // mean |orig - synth|
  std::size_t valid_pixels = 0;
  ImageBuffer grad_synth;  // d(value)/d(synth)
};

/// lambda_s * mean((1 - SSIM) / 2) + (1 - lambda_s) * mean|orig - synth| over
/// masked pixels. SSIM windows only gather masked pixels, so unmasked values
/// never influence the result. Throws EmptyMask.
PhotometricLoss photometric_loss(const ImageBuffer& orig, const ImageBuffer& synth,
                                 const Mask& mask, double lambda_s);

struct DisparityLoss {
  double value = 0.0;
  double left_term = 0.0;
  double right_term = 0.0;
  ScalarMap grad_left;   // d(value)/d(d_left), per pixel of disparity
  ScalarMap grad_right;
};

/// L1 between each width-normalised disparity map and the opposite map
/// warped into its view. Throws EmptyMask.
DisparityLoss disparity_consistency_loss(const DisparityMap& d_left, const DisparityMap& d_right);

struct PoseLoss {
  double value = 0.0;
  std::array<double, 6> grad_left{};
  std::array<double, 6> grad_right{};
};

PoseLoss pose_consistency_loss(const Pose6DoF& left, const Pose6DoF& right, double lambda_p,
                               double lambda_o);

/// Gradient of a scalar w.r.t. a rigid transform.
struct TransformGradient {
  Mat3 rotation = Mat3::Zero();
  Vec3 translation = Vec3::Zero();

  TransformGradient& operator+=(const TransformGradient& o) {
    rotation += o.rotation;
    translation += o.translation;
    return *this;
  }
};

/// Maps a gradient taken w.r.t. T⁻¹ onto T.
TransformGradient pull_back_through_inverse(const RigidTransform& t, const TransformGradient& g_inv);
/// Maps a gradient w.r.t. the right camera motion onto the rig motion.
TransformGradient pull_back_through_right_camera(const TransformGradient& g_right, double baseline);

struct GeometricLoss {
  double value = 0.0;
  double forward_term = 0.0;   // frame k points moved into frame k+1
  double backward_term = 0.0;  // frame k+1 points moved into frame k
  ScalarMap grad_depth_k;      // w.r.t. depth (meters)
  ScalarMap grad_depth_k1;
  TransformGradient grad_transform;
};

/// 3D registration with projective data association: each transformed point
/// is compared to the point recovered from the other frame's depth at its
/// reprojection. The other depth is interpolated in inverse depth. The per-
/// point residual is the L1 norm over (x, y, z). Throws EmptyMask.
GeometricLoss geometric_registration_loss(const DepthMap& depth_k, const DepthMap& depth_k1,
                                          const Intrinsics& k, const RigidTransform& t);

std::array<double, 6> geometric_pose_gradient(const GeometricLoss& loss, const Pose6DoF& pose);

struct StereoPhotometricLoss {
  double left_term = 0.0;   // L_pho^l : I_l vs I_l synthesized from I_r
  double right_term = 0.0;  // L_pho^r
  ScalarMap grad_depth_left;
  ScalarMap grad_depth_right;
};

StereoPhotometricLoss stereo_photometric_loss(const ImageBuffer& left, const ImageBuffer& right,
                                              const DepthMap& depth_left,
                                              const DepthMap& depth_right, const StereoRig& rig,
                                              double lambda_s);

struct TemporalPhotometricLoss {
  double forward_term = 0.0;   // L_pho^k : I_k vs I_k synthesized from I_k+1
  double backward_term = 0.0;  // L_pho^k+1
  ScalarMap grad_depth_k;
  ScalarMap grad_depth_k1;
  TransformGradient grad_transform;
};

/// Either depth may be empty (0x0) to drop the term that needs it.
TemporalPhotometricLoss temporal_photometric_loss(const ImageBuffer& image_k,
                                                  const ImageBuffer& image_k1,
                                                  const DepthMap& depth_k,
                                                  const DepthMap& depth_k1, const Intrinsics& k,
                                                  const RigidTransform& t, double lambda_s);

DisparityMap depth_to_disparity_map(const StereoRig& rig, const DepthMap& depth);

// ---------------------------------------------------------------------------
// Aggregated loss over a stereo sequence.

struct StereoImages {
  ImageBuffer left;
  ImageBuffer right;
};

struct SequenceObservation {
  std::vector<StereoImages> frames;
  StereoRig rig;
};

/// Free parameters. pose_left[k] and pose_right[k] are the motions from
/// frame k to k+1 predicted from the left and the right sequence; both are
/// expressed as the rig motion in the left camera frame.
struct SequenceState {
  std::vector<DepthMap> depth_left;
  std::vector<DepthMap> depth_right;
  std::vector<Pose6DoF> pose_left;
  std::vector<Pose6DoF> pose_right;
};

struct LossComponents {
  double spatial_photo = 0.0;   // sum of L_pho^l + L_pho^r over frames
  double disparity = 0.0;       // sum of L_dis^l + L_dis^r
  double pose = 0.0;            // sum of L_pos
  double temporal_photo = 0.0;  // sum of L_pho^k + L_pho^k+1, both sequences
  double geometric = 0.0;       // sum of L_geo^k + L_geo^k+1, both sequences
  double total = 0.0;           // weighted sum
  /// Every individual unweighted term, e.g. "pho_l[0]" or "geo_k[1,right]".
  std::vector<std::pair<std::string, double>> terms;

  double max_term() const;
};

struct SequenceGradient {
  std::vector<ScalarMap> depth_left;   // w.r.t. depth in meters
  std::vector<ScalarMap> depth_right;
  std::vector<std::array<double, 6>> pose_left;
  std::vector<std::array<double, 6>> pose_right;
};

struct TotalLoss {
  LossComponents components;
  SequenceGradient gradient;
};

/// Weighted sum of all loss families with analytic gradients. Families with
/// zero weight are skipped entirely.
TotalLoss total_loss(const SequenceObservation& obs, const SequenceState& state,
                     const LossWeights& weights);

}  // namespace absvo
