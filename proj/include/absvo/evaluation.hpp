#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "absvo/geometry.hpp"
#include "absvo/image.hpp"

namespace absvo {

/// Camera-to-world poses in frame order.
struct Trajectory {
  std::vector<RigidTransform> poses;
  std::vector<int> frame_indices;  // optional; empty means 0..n-1

  std::size_t size() const { return poses.size(); }
};

/// Cumulative path length: entry i is the distance travelled from frame 0.
std::vector<double> path_lengths(const Trajectory& traj);

/// Chains relative motions (frame k to k+1 point transforms) into
/// camera-to-world poses starting at the identity.
Trajectory trajectory_from_motions(const std::vector<RigidTransform>& motions);

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Applies x -> s R x + t to positions and R to orientations.
  Trajectory apply(const Trajectory& traj) const;
};

struct Alignment {
  Trajectory aligned;
  Similarity transform;
  double rmse = 0.0;  // position RMSE after alignment
};

enum class AlignMode { None, SixDof, SevenDof };

/// Closed-form least-squares similarity between camera positions (scale
/// fixed to 1 when with_scale is false). Needs >= 3 non-collinear positions.
/// Throws LengthMismatch, DegenerateConfiguration.
Alignment align_sim3(const Trajectory& estimate, const Trajectory& reference,
                     bool with_scale = true);

Alignment align(const Trajectory& estimate, const Trajectory& reference, AlignMode mode);

/// Position RMSE between two equally long trajectories.
double position_rmse(const Trajectory& a, const Trajectory& b);

inline constexpr std::array<double, 8> kSegmentLengths = {100, 200, 300, 400,
                                                          500, 600, 700, 800};

struct SegmentLengthDrift {
  double length = 0.0;
  std::size_t segments = 0;
  double t_rel = 0.0;  // percent
  double r_rel = 0.0;  // degrees per 100 m
};

struct DriftReport {
  double t_rel = 0.0;  // percent
  double r_rel = 0.0;  // degrees per 100 m
  std::size_t segments = 0;
  std::vector<SegmentLengthDrift> per_length;  // lengths with at least one segment
};

/// Segment drift over 100..800 m: every start frame, segment end chosen as
/// the first frame whose reference path length exceeds start + L. t_rel and
/// r_rel are root-mean-square errors over all segments. Throws TooShort,
/// LengthMismatch.
DriftReport drift_metrics(const Trajectory& estimate, const Trajectory& reference);

/// Rotation angle of a rotation matrix in radians.
double rotation_angle(const Mat3& r);

struct DepthEvalReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  std::size_t pixels = 0;
  double scale = 1.0;  // median ratio applied to pred
};

/// Metrics over pixels with gt in (0, cap]. Throws EmptyMask,
/// DimensionMismatch, NonPositiveDepth (pred <= 0 on the support).
DepthEvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap = 80.0,
                              bool median_scale = false);

}  // namespace absvo
