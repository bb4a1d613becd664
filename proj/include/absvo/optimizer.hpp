#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "absvo/geometry.hpp"
#include "absvo/image.hpp"
#include "absvo/losses.hpp"

namespace absvo {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update in place. lr_scale, when non-empty,
/// multiplies the step of each parameter. Throws LengthMismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr, std::span<const double> lr_scale = {});

/// Learning rate halves every ceil(total / 5) iterations.
struct Schedule {
  double initial_lr = 1e-3;
  int total_iterations = 2000;

  double lr_at(int iteration) const;
  void validate() const;
};

struct OptimizerSettings {
  LossWeights weights;
  Schedule schedule;
  /// Step multiplier for Euler-angle parameters relative to translation.
  double rotation_weight = 1.0;
  /// Stop when the loss changes by less than this fraction over the window.
  double convergence_tolerance = 1e-8;
  int convergence_window = 50;

  void validate() const;
};

struct LossRecord {
  int iteration = 0;
  double spatial_photo = 0.0;
  double disparity = 0.0;
  double pose = 0.0;
  double temporal_photo = 0.0;
  double geometric = 0.0;
  double total = 0.0;
};

struct OptimizationSummary {
  std::vector<LossRecord> history;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss at the returned (best-so-far) parameters
  int iterations = 0;
  bool converged = false;
};

struct DepthEstimate {
  DepthMap depth_left;
  DepthMap depth_right;
  OptimizationSummary summary;
};

/// Minimises the stereo photometric and disparity terms over left and right
/// log-depth, both initialised from init. Throws Divergence.
DepthEstimate optimize_depth_stereo(const StereoImages& pair, const StereoRig& rig,
                                    const DepthMap& init, const OptimizerSettings& settings);

struct PoseEstimate {
  Pose6DoF pose;
  OptimizationSummary summary;
};

/// Minimises the temporal photometric and registration terms over the six
/// motion parameters. depth_k1 may be empty (0x0); only the frame-k
/// photometric term is then used. Throws Divergence.
PoseEstimate optimize_pose_temporal(const ImageBuffer& image_k, const ImageBuffer& image_k1,
                                    const DepthMap& depth_k, const DepthMap& depth_k1,
                                    const Intrinsics& k, const Pose6DoF& init,
                                    const OptimizerSettings& settings);

struct JointEstimate {
  SequenceState state;
  OptimizationSummary summary;
  /// Largest |left - right| translation component and Euler angle over pairs.
  double max_translation_disagreement = 0.0;
  double max_rotation_disagreement = 0.0;
};

/// Minimises total_loss over every depth map (log-parameterised) and both
/// pose predictions of every frame pair. Throws Divergence.
JointEstimate optimize_joint(const SequenceObservation& obs, const SequenceState& init,
                             const OptimizerSettings& settings);

/// Flat depth maps at init_depth and identity motions.
SequenceState default_initial_state(const SequenceObservation& obs, double init_depth = 10.0);

}  // namespace absvo
