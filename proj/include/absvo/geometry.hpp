#pragma once

#include <array>

#include <Eigen/Core>

namespace absvo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Point3 = Eigen::Vector3d;  // camera frame: x right, y down, z forward

/// Positive-depth guard used by projection and the temporal warp.
inline constexpr double kEpsilonZ = 1e-6;

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
};

/// Rectified stereo rig. The right camera centre sits at (+baseline, 0, 0) in
/// the left camera frame; the left camera is the reference.
struct StereoRig {
  Intrinsics intrinsics;
  double baseline = 1.0;  // meters

  void validate() const;
};

/// Image-plane position: x is the column (horizontal), y is the row.
struct Pixel {
  double x = 0.0;
  double y = 0.0;
};

/// Six-parameter motion. rotation holds (roll, pitch, yaw) about the camera
/// X, Y, Z axes; the matrix is R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Pose6DoF {
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  std::array<double, 6> to_array() const;
  static Pose6DoF from_array(const std::array<double, 6>& p);
};

/// Maps a point p to R*p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (this ∘ other): applies other first.
  RigidTransform operator*(const RigidTransform& other) const;

  /// Largest deviation of RᵀR from identity and of det(R) from 1.
  double orthonormality_error() const;
};

RigidTransform euler_to_matrix(const Pose6DoF& pose);
Mat3 euler_rotation(const Vec3& roll_pitch_yaw);
/// Inverse of euler_rotation for pitch in (-pi/2, pi/2).
Vec3 matrix_to_euler(const Mat3& rotation);
Pose6DoF matrix_to_pose(const RigidTransform& transform);

/// dR/d(roll), dR/d(pitch), dR/d(yaw).
std::array<Mat3, 3> euler_rotation_derivatives(const Vec3& roll_pitch_yaw);

/// Chains dL/dR and dL/dt of a transform built from pose into dL/d(pose)
/// ordered (tx, ty, tz, roll, pitch, yaw).
std::array<double, 6> pose_gradient(const Pose6DoF& pose, const Mat3& grad_rotation,
                                    const Vec3& grad_translation);

Point3 transform_point(const RigidTransform& transform, const Point3& p);
RigidTransform invert(const RigidTransform& transform);
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Throws NonPositiveDepth when p.z <= kEpsilonZ.
Pixel project(const Intrinsics& k, const Point3& p);
/// Throws NonPositiveDepth when depth <= 0.
Point3 backproject(const Intrinsics& k, double u, double v, double depth);

/// Disparity in pixels: B * f / depth.
double depth_to_disparity_px(const StereoRig& rig, double depth);
double disparity_to_depth(const StereoRig& rig, double disparity_px);

/// Width-normalised disparity, d_px / image_width.
double normalize_disparity(double disparity_px, double image_width);
double denormalize_disparity(double normalized, double image_width);

/// Motion of the right camera for a rig motion expressed in the left camera
/// frame: C * T * C⁻¹ with C the left-to-right extrinsic.
RigidTransform right_camera_motion(const RigidTransform& rig_motion, double baseline);

}  // namespace absvo
