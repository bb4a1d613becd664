#include "absvo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "absvo/errors.hpp"

namespace absvo {

namespace {

// Plain 3x4 pose arithmetic with a fixed summation order; drift results are
// compared bit-for-bit against a reference enumeration.
struct Pose34 {
  double r[3][3];
  double t[3];
};

Pose34 to34(const RigidTransform& p) {
  Pose34 o{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) o.r[i][j] = p.rotation(i, j);
    o.t[i] = p.translation(i);
  }
  return o;
}

Pose34 inverse34(const Pose34& p) {
  Pose34 o{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) o.r[i][j] = p.r[j][i];
  for (int i = 0; i < 3; ++i) o.t[i] = -(o.r[i][0] * p.t[0] + o.r[i][1] * p.t[1] + o.r[i][2] * p.t[2]);
  return o;
}

Pose34 multiply34(const Pose34& a, const Pose34& b) {
  Pose34 o{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j)
      o.r[i][j] = a.r[i][0] * b.r[0][j] + a.r[i][1] * b.r[1][j] + a.r[i][2] * b.r[2][j];
    o.t[i] = a.r[i][0] * b.t[0] + a.r[i][1] * b.t[1] + a.r[i][2] * b.t[2] + a.t[i];
  }
  return o;
}

double angle34(const Pose34& p) {
  const double d = 0.5 * (p.r[0][0] + p.r[1][1] + p.r[2][2] - 1.0);
  return std::acos(std::max(std::min(d, 1.0), -1.0));
}

Eigen::Matrix3Xd positions(const Trajectory& t) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = t.poses[i].translation;
  return m;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace

std::vector<double> path_lengths(const Trajectory& traj) {
  std::vector<double> dist(traj.size(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Vec3& a = traj.poses[i - 1].translation;
    const Vec3& b = traj.poses[i].translation;
    const double dx = b.x() - a.x(), dy = b.y() - a.y(), dz = b.z() - a.z();
    dist[i] = dist[i - 1] + std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return dist;
}

Trajectory trajectory_from_motions(const std::vector<RigidTransform>& motions) {
  Trajectory traj;
  RigidTransform pose = RigidTransform::identity();
  traj.poses.push_back(pose);
  for (const auto& m : motions) {
    pose = pose * m.inverse();
    traj.poses.push_back(pose);
  }
  return traj;
}

Trajectory Similarity::apply(const Trajectory& traj) const {
  Trajectory out = traj;
  for (auto& p : out.poses) {
    p.translation = scale * (rotation * p.translation) + translation;
    p.rotation = rotation * p.rotation;
  }
  return out;
}

double position_rmse(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw LengthMismatch("position_rmse: trajectories differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += (a.poses[i].translation - b.poses[i].translation).squaredNorm();
  return std::sqrt(sum / static_cast<double>(a.size()));
}

Alignment align_sim3(const Trajectory& estimate, const Trajectory& reference, bool with_scale) {
  if (estimate.size() != reference.size())
    throw LengthMismatch("align_sim3: trajectories differ in length");
  if (estimate.size() < 3) throw DegenerateConfiguration("align_sim3: need at least 3 poses");

  const Eigen::Matrix3Xd x = positions(estimate);
  const Eigen::Matrix3Xd y = positions(reference);
  const double n = static_cast<double>(x.cols());
  const Vec3 mx = x.rowwise().mean();
  const Vec3 my = y.rowwise().mean();
  const Eigen::Matrix3Xd xc = x.colwise() - mx;
  const Eigen::Matrix3Xd yc = y.colwise() - my;

  for (const Eigen::Matrix3Xd* c : {&xc, &yc}) {
    const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(*c);
    const Vec3 sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-9 * sv(0))
      throw DegenerateConfiguration("align_sim3: positions are collinear");
  }

  const Mat3 cov = yc * xc.transpose() / n;
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;

  Alignment out;
  out.transform.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  if (with_scale) {
    const double var_x = xc.squaredNorm() / n;
    out.transform.scale = (svd.singularValues().asDiagonal() * s).trace() / var_x;
  }
  out.transform.translation = my - out.transform.scale * out.transform.rotation * mx;
  out.aligned = out.transform.apply(estimate);
  out.rmse = position_rmse(out.aligned, reference);
  return out;
}

Alignment align(const Trajectory& estimate, const Trajectory& reference, AlignMode mode) {
  if (mode == AlignMode::None) {
    Alignment out;
    out.aligned = estimate;
    out.rmse = position_rmse(estimate, reference);
    return out;
  }
  return align_sim3(estimate, reference, mode == AlignMode::SevenDof);
}

double rotation_angle(const Mat3& r) {
  const double d = 0.5 * (r.trace() - 1.0);
  return std::acos(std::clamp(d, -1.0, 1.0));
}

DriftReport drift_metrics(const Trajectory& estimate, const Trajectory& reference) {
  if (estimate.size() != reference.size())
    throw LengthMismatch("drift_metrics: trajectories differ in length");
  const std::vector<double> dist = path_lengths(reference);
  std::vector<Pose34> est, ref;
  for (const auto& p : estimate.poses) est.push_back(to34(p));
  for (const auto& p : reference.poses) ref.push_back(to34(p));

  constexpr double kDeg = 180.0 / std::numbers::pi;
  std::array<double, kSegmentLengths.size()> t_sq{}, r_sq{};
  std::array<std::size_t, kSegmentLengths.size()> counts{};
  double t_total = 0.0, r_total = 0.0;
  std::size_t n_total = 0;

  for (std::size_t first = 0; first < ref.size(); ++first) {
    for (std::size_t li = 0; li < kSegmentLengths.size(); ++li) {
      const double len = kSegmentLengths[li];
      const auto it = std::upper_bound(dist.begin(), dist.end(), dist[first] + len);
      if (it == dist.end()) continue;
      const auto last = static_cast<std::size_t>(it - dist.begin());

      const Pose34 d_ref = multiply34(inverse34(ref[first]), ref[last]);
      const Pose34 d_est = multiply34(inverse34(est[first]), est[last]);
      const Pose34 err = multiply34(inverse34(d_est), d_ref);
      const double t_err =
          std::sqrt(err.t[0] * err.t[0] + err.t[1] * err.t[1] + err.t[2] * err.t[2]) / len;
      const double r_err = angle34(err) * kDeg / len;

      t_sq[li] += t_err * t_err;
      r_sq[li] += r_err * r_err;
      ++counts[li];
      t_total += t_err * t_err;
      r_total += r_err * r_err;
      ++n_total;
    }
  }
  if (n_total == 0) throw TooShort("drift_metrics: reference path has no 100 m segment");

  DriftReport report;
  report.segments = n_total;
  report.t_rel = 100.0 * std::sqrt(t_total / static_cast<double>(n_total));
  report.r_rel = 100.0 * std::sqrt(r_total / static_cast<double>(n_total));
  for (std::size_t li = 0; li < kSegmentLengths.size(); ++li) {
    if (counts[li] == 0) continue;
    const double c = static_cast<double>(counts[li]);
    report.per_length.push_back({kSegmentLengths[li], counts[li], 100.0 * std::sqrt(t_sq[li] / c),
                                 100.0 * std::sqrt(r_sq[li] / c)});
  }
  return report;
}

DepthEvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap,
                              bool median_scale) {
  if (!pred.same_shape(gt)) throw DimensionMismatch("depth_metrics: map shapes differ");
  std::vector<double> p, g;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(gt[i] > 0.0 && gt[i] <= cap)) continue;
    if (!(pred[i] > 0.0)) throw NonPositiveDepth("depth_metrics: prediction must be positive");
    p.push_back(pred[i]);
    g.push_back(gt[i]);
  }
  if (g.empty()) throw EmptyMask("depth_metrics: no ground-truth pixels within the cap");

  DepthEvalReport r;
  r.pixels = g.size();
  if (median_scale) {
    r.scale = median(g) / median(p);
    for (double& v : p) v *= r.scale;
  }
  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = p[i] - g[i];
    abs_rel += std::abs(d) / g[i];
    sq_rel += d * d / g[i];
    sq += d * d;
    const double dl = std::log(p[i]) - std::log(g[i]);
    sq_log += dl * dl;
  }
  const double n = static_cast<double>(g.size());
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sq_log / n);
  return r;
}

}  // namespace absvo
