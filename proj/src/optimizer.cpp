#include "absvo/optimizer.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "absvo/errors.hpp"

namespace absvo {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr, std::span<const double> lr_scale) {
  if (params.size() != grads.size())
    throw LengthMismatch("adam_step: params and grads differ in length");
  if (!lr_scale.empty() && lr_scale.size() != params.size())
    throw LengthMismatch("adam_step: lr_scale length differs from params");
  if (state.m.empty() && state.v.empty() && state.step == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw LengthMismatch("adam_step: state size differs from params");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    const double scale = lr_scale.empty() ? 1.0 : lr_scale[i];
    params[i] -= lr * scale * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

double Schedule::lr_at(int iteration) const {
  const int period = std::max(1, (total_iterations + 4) / 5);
  return initial_lr * std::pow(0.5, iteration / period);
}

void Schedule::validate() const {
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr))
    throw ConfigError("learning rate must be positive");
  if (total_iterations < 1) throw ConfigError("iterations must be at least 1");
}

void OptimizerSettings::validate() const {
  weights.validate();
  schedule.validate();
  if (!(rotation_weight > 0.0)) throw ConfigError("rotation_weight must be positive");
  if (convergence_window < 1) throw ConfigError("convergence window must be at least 1");
}

namespace {

struct Evaluation {
  LossComponents components;
  std::vector<double> gradient;
};

using Objective = std::function<Evaluation(std::span<const double>)>;

LossRecord record_of(int iteration, const LossComponents& c) {
  return {iteration, c.spatial_photo, c.disparity, c.pose, c.temporal_photo, c.geometric, c.total};
}

// Adam with the step schedule, best-so-far retention and the relative-change
// stopping rule. Leaves the best parameters in `params`.
OptimizationSummary minimize(std::vector<double>& params, std::span<const double> lr_scale,
                             const Objective& objective, const OptimizerSettings& settings) {
  settings.validate();
  OptimizationSummary summary;
  AdamState adam(params.size());
  std::vector<double> best = params;
  double best_loss = std::numeric_limits<double>::infinity();

  const int total = settings.schedule.total_iterations;
  for (int it = 0; it <= total; ++it) {
    Evaluation ev;
    try {
      ev = objective(params);
    } catch (const EmptyMask& e) {
      throw Divergence(std::string("optimizer left the image overlap: ") + e.what());
    }
    const double loss = ev.components.total;
    if (!std::isfinite(loss))
      throw Divergence("optimizer: loss became non-finite at iteration " + std::to_string(it));
    for (double g : ev.gradient)
      if (!std::isfinite(g))
        throw Divergence("optimizer: gradient became non-finite at iteration " + std::to_string(it));

    summary.history.push_back(record_of(it, ev.components));
    if (it == 0) summary.initial_loss = loss;
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
    summary.iterations = it;

    const int window = settings.convergence_window;
    if (it >= window) {
      const double before = summary.history[it - window].total;
      if (std::abs(before - loss) <= settings.convergence_tolerance * std::abs(before)) {
        summary.converged = true;
        break;
      }
    }
    if (it == total) break;
    adam_step(adam, params, ev.gradient, settings.schedule.lr_at(it), lr_scale);
  }
  params = best;
  summary.final_loss = best_loss;
  return summary;
}

std::vector<double> log_of(const DepthMap& d) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = std::log(d[i]);
  return out;
}

DepthMap exp_of(std::span<const double> logs, int h, int w) {
  DepthMap d(h, w);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::exp(logs[i]);
  return d;
}

void append_log_gradient(std::vector<double>& out, const ScalarMap& grad, const DepthMap& depth) {
  for (std::size_t i = 0; i < depth.size(); ++i) out.push_back(grad[i] * depth[i]);
}

}  // namespace

DepthEstimate optimize_depth_stereo(const StereoImages& pair, const StereoRig& rig,
                                    const DepthMap& init, const OptimizerSettings& settings) {
  rig.validate();
  init.validate();
  if (!init.same_shape(pair.left)) throw DimensionMismatch("optimize_depth_stereo: init size differs from images");
  const int h = init.height(), w = init.width();
  const std::size_t n = init.size();

  SequenceObservation obs;
  obs.frames.push_back(pair);
  obs.rig = rig;

  std::vector<double> params = log_of(init);
  const std::vector<double> right = log_of(init);
  params.insert(params.end(), right.begin(), right.end());

  LossWeights weights = settings.weights;
  weights.w_pose = weights.w_temporal_photo = weights.w_geo = 0.0;

  const Objective objective = [&](std::span<const double> p) {
    SequenceState state;
    state.depth_left.push_back(exp_of(p.subspan(0, n), h, w));
    state.depth_right.push_back(exp_of(p.subspan(n, n), h, w));
    TotalLoss tl = total_loss(obs, state, weights);
    Evaluation ev{std::move(tl.components), {}};
    ev.gradient.reserve(2 * n);
    append_log_gradient(ev.gradient, tl.gradient.depth_left[0], state.depth_left[0]);
    append_log_gradient(ev.gradient, tl.gradient.depth_right[0], state.depth_right[0]);
    return ev;
  };

  DepthEstimate out;
  out.summary = minimize(params, {}, objective, settings);
  out.depth_left = exp_of(std::span<const double>(params).subspan(0, n), h, w);
  out.depth_right = exp_of(std::span<const double>(params).subspan(n, n), h, w);
  return out;
}

PoseEstimate optimize_pose_temporal(const ImageBuffer& image_k, const ImageBuffer& image_k1,
                                    const DepthMap& depth_k, const DepthMap& depth_k1,
                                    const Intrinsics& k, const Pose6DoF& init,
                                    const OptimizerSettings& settings) {
  k.validate();
  depth_k.validate();
  const bool have_k1 = depth_k1.size() > 0;
  if (have_k1) depth_k1.validate();
  const LossWeights& w = settings.weights;

  const Objective objective = [&](std::span<const double> p) {
    std::array<double, 6> arr{};
    std::copy(p.begin(), p.end(), arr.begin());
    const Pose6DoF pose = Pose6DoF::from_array(arr);
    const RigidTransform t = euler_to_matrix(pose);

    Evaluation ev;
    TransformGradient g;
    if (w.w_temporal_photo > 0.0) {
      const auto pho = temporal_photometric_loss(image_k, image_k1, depth_k,
                                                 have_k1 ? depth_k1 : DepthMap(), k, t, w.lambda_s);
      ev.components.temporal_photo = pho.forward_term + pho.backward_term;
      g.rotation += w.w_temporal_photo * pho.grad_transform.rotation;
      g.translation += w.w_temporal_photo * pho.grad_transform.translation;
    }
    if (w.w_geo > 0.0 && have_k1) {
      const auto geo = geometric_registration_loss(depth_k, depth_k1, k, t);
      ev.components.geometric = geo.value;
      g.rotation += w.w_geo * geo.grad_transform.rotation;
      g.translation += w.w_geo * geo.grad_transform.translation;
    }
    ev.components.total =
        w.w_temporal_photo * ev.components.temporal_photo + w.w_geo * ev.components.geometric;
    const auto pg = pose_gradient(pose, g.rotation, g.translation);
    ev.gradient.assign(pg.begin(), pg.end());
    return ev;
  };

  const auto a = init.to_array();
  std::vector<double> params(a.begin(), a.end());
  const std::vector<double> scale = {1, 1, 1, settings.rotation_weight, settings.rotation_weight,
                                     settings.rotation_weight};
  PoseEstimate out;
  out.summary = minimize(params, scale, objective, settings);
  std::array<double, 6> best{};
  std::copy(params.begin(), params.end(), best.begin());
  out.pose = Pose6DoF::from_array(best);
  return out;
}

SequenceState default_initial_state(const SequenceObservation& obs, double init_depth) {
  if (obs.frames.empty()) throw LengthMismatch("default_initial_state: no frames");
  SequenceState s;
  const int h = obs.frames.front().left.height(), w = obs.frames.front().left.width();
  s.depth_left.assign(obs.frames.size(), DepthMap(h, w, init_depth));
  s.depth_right.assign(obs.frames.size(), DepthMap(h, w, init_depth));
  s.pose_left.assign(obs.frames.size() - 1, Pose6DoF{});
  s.pose_right.assign(obs.frames.size() - 1, Pose6DoF{});
  return s;
}

JointEstimate optimize_joint(const SequenceObservation& obs, const SequenceState& init,
                             const OptimizerSettings& settings) {
  const std::size_t nf = obs.frames.size();
  if (nf < 2) throw LengthMismatch("optimize_joint: need at least two frames");
  if (init.depth_left.size() != nf || init.depth_right.size() != nf ||
      init.pose_left.size() + 1 != nf || init.pose_right.size() + 1 != nf)
    throw LengthMismatch("optimize_joint: initial state does not match the sequence");
  const int h = obs.frames.front().left.height(), w = obs.frames.front().left.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const std::size_t np = nf - 1;

  // Layout: [left depth 0..nf) [right depth 0..nf) [left pose, right pose] per pair.
  std::vector<double> params;
  params.reserve(2 * nf * n + 12 * np);
  for (const auto& d : init.depth_left) {
    d.validate();
    const auto l = log_of(d);
    params.insert(params.end(), l.begin(), l.end());
  }
  for (const auto& d : init.depth_right) {
    d.validate();
    const auto l = log_of(d);
    params.insert(params.end(), l.begin(), l.end());
  }
  for (std::size_t p = 0; p < np; ++p) {
    const auto l = init.pose_left[p].to_array();
    const auto r = init.pose_right[p].to_array();
    params.insert(params.end(), l.begin(), l.end());
    params.insert(params.end(), r.begin(), r.end());
  }
  std::vector<double> scale(params.size(), 1.0);
  const std::size_t pose_base = 2 * nf * n;
  for (std::size_t p = 0; p < 2 * np; ++p)
    for (int j = 3; j < 6; ++j) scale[pose_base + 6 * p + j] = settings.rotation_weight;

  auto unpack = [&](std::span<const double> p) {
    SequenceState s;
    for (std::size_t f = 0; f < nf; ++f) s.depth_left.push_back(exp_of(p.subspan(f * n, n), h, w));
    for (std::size_t f = 0; f < nf; ++f)
      s.depth_right.push_back(exp_of(p.subspan((nf + f) * n, n), h, w));
    for (std::size_t q = 0; q < np; ++q) {
      std::array<double, 6> l{}, r{};
      std::copy_n(p.begin() + pose_base + 12 * q, 6, l.begin());
      std::copy_n(p.begin() + pose_base + 12 * q + 6, 6, r.begin());
      s.pose_left.push_back(Pose6DoF::from_array(l));
      s.pose_right.push_back(Pose6DoF::from_array(r));
    }
    return s;
  };

  const Objective objective = [&](std::span<const double> p) {
    const SequenceState s = unpack(p);
    TotalLoss tl = total_loss(obs, s, settings.weights);
    Evaluation ev{std::move(tl.components), {}};
    ev.gradient.reserve(p.size());
    for (std::size_t f = 0; f < nf; ++f)
      append_log_gradient(ev.gradient, tl.gradient.depth_left[f], s.depth_left[f]);
    for (std::size_t f = 0; f < nf; ++f)
      append_log_gradient(ev.gradient, tl.gradient.depth_right[f], s.depth_right[f]);
    for (std::size_t q = 0; q < np; ++q) {
      ev.gradient.insert(ev.gradient.end(), tl.gradient.pose_left[q].begin(),
                         tl.gradient.pose_left[q].end());
      ev.gradient.insert(ev.gradient.end(), tl.gradient.pose_right[q].begin(),
                         tl.gradient.pose_right[q].end());
    }
    return ev;
  };

  JointEstimate out;
  out.summary = minimize(params, scale, objective, settings);
  out.state = unpack(params);
  for (std::size_t q = 0; q < np; ++q) {
    const auto l = out.state.pose_left[q].to_array();
    const auto r = out.state.pose_right[q].to_array();
    for (int j = 0; j < 6; ++j) {
      double& slot = j < 3 ? out.max_translation_disagreement : out.max_rotation_disagreement;
      slot = std::max(slot, std::abs(l[j] - r[j]));
    }
  }
  return out;
}

}  // namespace absvo
