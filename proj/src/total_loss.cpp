#include <algorithm>
#include <string>

#include "absvo/errors.hpp"
#include "absvo/losses.hpp"

namespace absvo {

namespace {

void add_scaled(ScalarMap& dst, const ScalarMap& src, double scale) {
  if (src.size() == 0) return;
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void add_scaled(std::array<double, 6>& dst, const std::array<double, 6>& src, double scale) {
  for (int i = 0; i < 6; ++i) dst[i] += scale * src[i];
}

std::string label(const char* name, std::size_t index, const char* side = nullptr) {
  std::string s = std::string(name) + "[" + std::to_string(index);
  if (side) s += std::string(",") + side;
  return s + "]";
}

void check_state(const SequenceObservation& obs, const SequenceState& state) {
  const std::size_t n = obs.frames.size();
  if (n == 0) throw LengthMismatch("total_loss: no frames");
  if (state.depth_left.size() != n || state.depth_right.size() != n)
    throw LengthMismatch("total_loss: need one left and one right depth map per frame");
  if (state.pose_left.size() + 1 != n || state.pose_right.size() + 1 != n)
    throw LengthMismatch("total_loss: need one left and one right pose per frame pair");
  const ImageBuffer& ref = obs.frames.front().left;
  for (std::size_t f = 0; f < n; ++f) {
    if (!obs.frames[f].left.same_shape(ref) || !obs.frames[f].right.same_shape(ref))
      throw DimensionMismatch("total_loss: all images must share one shape");
    if (!state.depth_left[f].same_shape(ref) || !state.depth_right[f].same_shape(ref))
      throw DimensionMismatch("total_loss: depth maps must match the image size");
  }
}

}  // namespace

double LossComponents::max_term() const {
  double m = 0.0;
  for (const auto& [name, value] : terms) m = std::max(m, value);
  return m;
}

TotalLoss total_loss(const SequenceObservation& obs, const SequenceState& state,
                     const LossWeights& weights) {
  weights.validate();
  check_state(obs, state);

  const std::size_t n = obs.frames.size();
  const int h = obs.frames.front().left.height();
  const int w = obs.frames.front().left.width();
  const StereoRig& rig = obs.rig;
  const Intrinsics& k = rig.intrinsics;

  TotalLoss out;
  LossComponents& comp = out.components;
  SequenceGradient& grad = out.gradient;
  grad.depth_left.assign(n, ScalarMap(h, w));
  grad.depth_right.assign(n, ScalarMap(h, w));
  grad.pose_left.assign(n - 1, {});
  grad.pose_right.assign(n - 1, {});

  for (std::size_t f = 0; f < n; ++f) {
    const DepthMap& dl = state.depth_left[f];
    const DepthMap& dr = state.depth_right[f];
    if (weights.w_spatial_photo > 0.0) {
      const auto pho = stereo_photometric_loss(obs.frames[f].left, obs.frames[f].right, dl, dr,
                                               rig, weights.lambda_s);
      comp.spatial_photo += pho.left_term + pho.right_term;
      comp.terms.emplace_back(label("pho_l", f), pho.left_term);
      comp.terms.emplace_back(label("pho_r", f), pho.right_term);
      add_scaled(grad.depth_left[f], pho.grad_depth_left, weights.w_spatial_photo);
      add_scaled(grad.depth_right[f], pho.grad_depth_right, weights.w_spatial_photo);
    }
    if (weights.w_disp > 0.0) {
      const DisparityMap displ = depth_to_disparity_map(rig, dl);
      const DisparityMap dispr = depth_to_disparity_map(rig, dr);
      const auto dis = disparity_consistency_loss(displ, dispr);
      comp.disparity += dis.value;
      comp.terms.emplace_back(label("dis_l", f), dis.left_term);
      comp.terms.emplace_back(label("dis_r", f), dis.right_term);
      // d(disp)/dD = -disp / D
      for (std::size_t i = 0; i < dl.size(); ++i) {
        grad.depth_left[f][i] += weights.w_disp * dis.grad_left[i] * (-displ[i] / dl[i]);
        grad.depth_right[f][i] += weights.w_disp * dis.grad_right[i] * (-dispr[i] / dr[i]);
      }
    }
  }

  for (std::size_t p = 0; p + 1 < n; ++p) {
    const Pose6DoF& pl = state.pose_left[p];
    const Pose6DoF& pr = state.pose_right[p];
    if (weights.w_pose > 0.0) {
      const auto pos = pose_consistency_loss(pl, pr, weights.lambda_p, weights.lambda_o);
      comp.pose += pos.value;
      comp.terms.emplace_back(label("pos", p), pos.value);
      add_scaled(grad.pose_left[p], pos.grad_left, weights.w_pose);
      add_scaled(grad.pose_right[p], pos.grad_right, weights.w_pose);
    }
    if (weights.w_temporal_photo <= 0.0 && weights.w_geo <= 0.0) continue;

    // Left sequence uses the rig motion directly; the right sequence sees it
    // conjugated by the stereo extrinsic.
    for (int side = 0; side < 2; ++side) {
      const bool is_left = side == 0;
      const char* tag = is_left ? "left" : "right";
      const Pose6DoF& pose = is_left ? pl : pr;
      const RigidTransform rig_motion = euler_to_matrix(pose);
      const RigidTransform motion =
          is_left ? rig_motion : right_camera_motion(rig_motion, rig.baseline);
      const ImageBuffer& ik = is_left ? obs.frames[p].left : obs.frames[p].right;
      const ImageBuffer& ik1 = is_left ? obs.frames[p + 1].left : obs.frames[p + 1].right;
      const DepthMap& dk = is_left ? state.depth_left[p] : state.depth_right[p];
      const DepthMap& dk1 = is_left ? state.depth_left[p + 1] : state.depth_right[p + 1];
      ScalarMap& gk = is_left ? grad.depth_left[p] : grad.depth_right[p];
      ScalarMap& gk1 = is_left ? grad.depth_left[p + 1] : grad.depth_right[p + 1];

      TransformGradient g_motion;
      if (weights.w_temporal_photo > 0.0) {
        const auto pho = temporal_photometric_loss(ik, ik1, dk, dk1, k, motion, weights.lambda_s);
        comp.temporal_photo += pho.forward_term + pho.backward_term;
        comp.terms.emplace_back(label("pho_k", p, tag), pho.forward_term);
        comp.terms.emplace_back(label("pho_k1", p, tag), pho.backward_term);
        add_scaled(gk, pho.grad_depth_k, weights.w_temporal_photo);
        add_scaled(gk1, pho.grad_depth_k1, weights.w_temporal_photo);
        g_motion.rotation += weights.w_temporal_photo * pho.grad_transform.rotation;
        g_motion.translation += weights.w_temporal_photo * pho.grad_transform.translation;
      }
      if (weights.w_geo > 0.0) {
        const auto geo = geometric_registration_loss(dk, dk1, k, motion);
        comp.geometric += geo.value;
        comp.terms.emplace_back(label("geo_k", p, tag), geo.forward_term);
        comp.terms.emplace_back(label("geo_k1", p, tag), geo.backward_term);
        add_scaled(gk, geo.grad_depth_k, weights.w_geo);
        add_scaled(gk1, geo.grad_depth_k1, weights.w_geo);
        g_motion.rotation += weights.w_geo * geo.grad_transform.rotation;
        g_motion.translation += weights.w_geo * geo.grad_transform.translation;
      }
      const TransformGradient g_rig =
          is_left ? g_motion : pull_back_through_right_camera(g_motion, rig.baseline);
      add_scaled(is_left ? grad.pose_left[p] : grad.pose_right[p],
                 pose_gradient(pose, g_rig.rotation, g_rig.translation), 1.0);
    }
  }

  comp.total = weights.w_spatial_photo * comp.spatial_photo + weights.w_disp * comp.disparity +
               weights.w_pose * comp.pose + weights.w_temporal_photo * comp.temporal_photo +
               weights.w_geo * comp.geometric;
  return out;
}

}  // namespace absvo
