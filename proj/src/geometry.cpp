#include "absvo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "absvo/errors.hpp"

namespace absvo {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw InputError("intrinsics: focal lengths must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw InputError("intrinsics: principal point must be finite");
}

void StereoRig::validate() const {
  intrinsics.validate();
  if (!(baseline > 0.0) || !std::isfinite(baseline))
    throw InputError("stereo rig: baseline must be positive");
}

std::array<double, 6> Pose6DoF::to_array() const {
  return {translation.x(), translation.y(), translation.z(),
          rotation.x(),    rotation.y(),    rotation.z()};
}

Pose6DoF Pose6DoF::from_array(const std::array<double, 6>& p) {
  Pose6DoF pose;
  pose.translation = Vec3(p[0], p[1], p[2]);
  pose.rotation = Vec3(p[3], p[4], p[5]);
  return pose;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

double RigidTransform::orthonormality_error() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(rotation.determinant() - 1.0);
  return std::max(ortho, det);
}

namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}

Mat3 drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}

Mat3 drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}

}  // namespace

Mat3 euler_rotation(const Vec3& rpy) {
  return rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
}

std::array<Mat3, 3> euler_rotation_derivatives(const Vec3& rpy) {
  const Mat3 rx = rot_x(rpy.x()), ry = rot_y(rpy.y()), rz = rot_z(rpy.z());
  return {rz * ry * drot_x(rpy.x()), rz * drot_y(rpy.y()) * rx, drot_z(rpy.z()) * ry * rx};
}

Vec3 matrix_to_euler(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

RigidTransform euler_to_matrix(const Pose6DoF& pose) {
  RigidTransform t;
  t.rotation = euler_rotation(pose.rotation);
  t.translation = pose.translation;
  return t;
}

Pose6DoF matrix_to_pose(const RigidTransform& transform) {
  Pose6DoF pose;
  pose.translation = transform.translation;
  pose.rotation = matrix_to_euler(transform.rotation);
  return pose;
}

std::array<double, 6> pose_gradient(const Pose6DoF& pose, const Mat3& grad_rotation,
                                    const Vec3& grad_translation) {
  const auto d = euler_rotation_derivatives(pose.rotation);
  std::array<double, 6> g{};
  g[0] = grad_translation.x();
  g[1] = grad_translation.y();
  g[2] = grad_translation.z();
  for (int i = 0; i < 3; ++i) g[3 + i] = grad_rotation.cwiseProduct(d[i]).sum();
  return g;
}

Point3 transform_point(const RigidTransform& transform, const Point3& p) {
  return transform.apply(p);
}

RigidTransform invert(const RigidTransform& transform) { return transform.inverse(); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

Pixel project(const Intrinsics& k, const Point3& p) {
  if (!(p.z() > kEpsilonZ))
    throw NonPositiveDepth("project: point depth " + std::to_string(p.z()) + " is not positive");
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Point3 backproject(const Intrinsics& k, double u, double v, double depth) {
  if (!(depth > 0.0)) throw NonPositiveDepth("backproject: depth must be positive");
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

double depth_to_disparity_px(const StereoRig& rig, double depth) {
  if (!(depth > 0.0)) throw NonPositiveDepth("depth_to_disparity_px: depth must be positive");
  return rig.baseline * rig.intrinsics.fx / depth;
}

double disparity_to_depth(const StereoRig& rig, double disparity_px) {
  if (!(disparity_px > 0.0))
    throw NonPositiveDisparity("disparity_to_depth: disparity must be positive");
  return rig.baseline * rig.intrinsics.fx / disparity_px;
}

double normalize_disparity(double disparity_px, double image_width) {
  if (!(image_width > 0.0)) throw InputError("normalize_disparity: width must be positive");
  return disparity_px / image_width;
}

double denormalize_disparity(double normalized, double image_width) {
  if (!(image_width > 0.0)) throw InputError("denormalize_disparity: width must be positive");
  return normalized * image_width;
}

RigidTransform right_camera_motion(const RigidTransform& rig_motion, double baseline) {
  // X_r = X_l - b, so t_r = t + R b - b.
  const Vec3 b(baseline, 0.0, 0.0);
  RigidTransform out;
  out.rotation = rig_motion.rotation;
  out.translation = rig_motion.translation + rig_motion.rotation * b - b;
  return out;
}

}  // namespace absvo
