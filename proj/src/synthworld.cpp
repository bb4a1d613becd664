#include "absvo/synthworld.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "absvo/errors.hpp"

namespace absvo {

namespace {

constexpr int kWaves = 6;
constexpr std::array<double, kWaves> kWavelengthFactor = {1.0, 1.31, 0.83, 1.57, 1.13, 0.92};
constexpr std::array<double, kWaves> kDirectionDeg = {7.0, 37.0, 67.0, 97.0, 127.0, 157.0};

struct Plane {
  Vec3 origin;
  Vec3 normal;
  Vec3 axis_u;  // texture coordinate directions
  Vec3 axis_v;
  bool lower_half_only = false;  // stairs: keep hits with world y >= 0
};

std::vector<Plane> scene_planes(const SceneSpec& spec) {
  const Plane front{{0, 0, spec.depth}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, false};
  switch (spec.kind) {
    case SceneKind::FrontoParallel:
      return {front};
    case SceneKind::Stairs: {
      Plane near = front;
      near.lower_half_only = true;
      return {near, {{0, 0, spec.far_depth}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, false}};
    }
    case SceneKind::Slanted: {
      const double a = spec.slant_deg * std::numbers::pi / 180.0;
      return {{{0, 0, spec.depth},
               {std::sin(a), 0, std::cos(a)},
               {std::cos(a), 0, -std::sin(a)},
               {0, 1, 0},
               false}};
    }
  }
  return {front};
}

// 53-bit uniform in [0, 1) from raw engine output, independent of the
// standard library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

using Phases = std::array<double, kWaves>;

// Phases depend on (seed, channel) only.
Phases texture_phases(const TextureSpec& texture, int channel) {
  std::mt19937_64 rng(texture.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(channel));
  Phases phases{};
  for (double& p : phases) p = 2.0 * std::numbers::pi * unit_uniform(rng);
  return phases;
}

double evaluate_texture(const TextureSpec& texture, const Phases& phases, double s1, double s2) {
  double v = 0.5;
  for (int i = 0; i < kWaves; ++i) {
    const double dir = kDirectionDeg[i] * std::numbers::pi / 180.0;
    const double wavenumber =
        2.0 * std::numbers::pi / (texture.base_wavelength * kWavelengthFactor[i]);
    v += texture.amplitude *
         std::sin(wavenumber * (std::cos(dir) * s1 + std::sin(dir) * s2) + phases[i]);
  }
  return v;
}

struct Hit {
  double depth;
  const Plane* plane;
  Vec3 point;
};

Hit cast_ray(const std::vector<Plane>& planes, const Vec3& origin, const Vec3& dir) {
  Hit best{std::numeric_limits<double>::infinity(), nullptr, Vec3::Zero()};
  for (const Plane& plane : planes) {
    const double denom = plane.normal.dot(dir);
    if (std::abs(denom) < 1e-12) {
      if (plane.lower_half_only) continue;
      throw DegenerateGeometry("render: ray parallel to scene plane");
    }
    const double t = plane.normal.dot(plane.origin - origin) / denom;
    if (!(t > kEpsilonZ)) continue;
    const Vec3 point = origin + t * dir;
    if (plane.lower_half_only && point.y() < 0.0) continue;
    if (t < best.depth) best = {t, &plane, point};
  }
  if (!best.plane) throw DegenerateGeometry("render: ray misses every scene plane");
  return best;
}

void render_view(const SceneSpec& spec, const std::vector<Plane>& planes,
                 const RigidTransform& cam_to_world, ImageBuffer& image, DepthMap& depth) {
  const Intrinsics& k = spec.rig.intrinsics;
  std::vector<Phases> phases;
  for (int ch = 0; ch < spec.channels; ++ch) phases.push_back(texture_phases(spec.texture, ch));
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      // z = 1 in the camera frame, so the ray parameter is the depth.
      const Vec3 ray_cam((c - k.cx) / k.fx, (r - k.cy) / k.fy, 1.0);
      const Hit hit = cast_ray(planes, cam_to_world.translation, cam_to_world.rotation * ray_cam);
      depth(r, c) = hit.depth;
      const Vec3 rel = hit.point - hit.plane->origin;
      const double s1 = rel.dot(hit.plane->axis_u);
      const double s2 = rel.dot(hit.plane->axis_v);
      for (int ch = 0; ch < spec.channels; ++ch) image.at(r, c, ch) = evaluate_texture(spec.texture, phases[ch], s1, s2);
    }
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::FrontoParallel:
      return "plane";
    case SceneKind::Stairs:
      return "stairs";
    case SceneKind::Slanted:
      return "slanted";
  }
  return "plane";
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "plane") return SceneKind::FrontoParallel;
  if (name == "stairs") return SceneKind::Stairs;
  if (name == "slanted") return SceneKind::Slanted;
  throw ConfigError("unknown scene kind '" + name + "' (expected plane, stairs or slanted)");
}

void SceneSpec::validate() const {
  auto in_range = [](double d) { return d >= 1.0 && d <= 200.0; };
  if (!in_range(depth)) throw ConfigError("scene depth must lie in [1, 200] m");
  if (kind == SceneKind::Stairs && (!in_range(far_depth) || far_depth <= depth))
    throw ConfigError("stairs far_depth must lie in [1, 200] m and exceed depth");
  if (kind == SceneKind::Slanted && !(std::abs(slant_deg) < 80.0))
    throw ConfigError("slant_deg must lie in (-80, 80)");
  if (width < 16 || height < 16) throw ConfigError("image size must be at least 16x16");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (!(texture.base_wavelength > 0.0)) throw ConfigError("texture wavelength must be positive");
  if (!(texture.amplitude >= 0.0) || texture.amplitude * kWaves > 0.5)
    throw ConfigError("texture amplitude must keep intensities inside [0, 1]");
  rig.validate();
}

StereoRig default_rig(int width, int height, double baseline) {
  StereoRig rig;
  rig.intrinsics.fx = 0.75 * width;
  rig.intrinsics.fy = 0.75 * width;
  rig.intrinsics.cx = 0.5 * (width - 1);
  rig.intrinsics.cy = 0.5 * (height - 1);
  rig.baseline = baseline;
  return rig;
}

double texture_value(const TextureSpec& texture, double s1, double s2, int channel) {
  return evaluate_texture(texture, texture_phases(texture, channel), s1, s2);
}

RenderedFrame render_frame(const SceneSpec& spec, const RigidTransform& camera_pose) {
  spec.validate();
  const auto planes = scene_planes(spec);
  RenderedFrame frame{ImageBuffer(spec.height, spec.width, spec.channels),
                      ImageBuffer(spec.height, spec.width, spec.channels),
                      DepthMap(spec.height, spec.width, 1.0),
                      DepthMap(spec.height, spec.width, 1.0),
                      camera_pose};
  render_view(spec, planes, camera_pose, frame.left, frame.gt_depth_left);
  RigidTransform left_to_right_center;
  left_to_right_center.translation = Vec3(spec.rig.baseline, 0.0, 0.0);
  render_view(spec, planes, camera_pose * left_to_right_center, frame.right, frame.gt_depth_right);
  return frame;
}

std::vector<RenderedFrame> render_sequence(const SceneSpec& spec,
                                           const std::vector<Pose6DoF>& motions) {
  std::vector<RenderedFrame> frames;
  frames.reserve(motions.size() + 1);
  RigidTransform pose = RigidTransform::identity();
  frames.push_back(render_frame(spec, pose));
  for (const Pose6DoF& motion : motions) {
    pose = pose * euler_to_matrix(motion).inverse();
    frames.push_back(render_frame(spec, pose));
  }
  return frames;
}

SequenceObservation make_observation(const std::vector<RenderedFrame>& frames,
                                     const StereoRig& rig) {
  SequenceObservation obs;
  obs.rig = rig;
  for (const auto& f : frames) obs.frames.push_back({f.left, f.right});
  return obs;
}

SequenceState ground_truth_state(const std::vector<RenderedFrame>& frames,
                                 const std::vector<Pose6DoF>& motions) {
  if (motions.size() + 1 != frames.size())
    throw LengthMismatch("ground_truth_state: need one motion per frame pair");
  SequenceState state;
  for (const auto& f : frames) {
    state.depth_left.push_back(f.gt_depth_left);
    state.depth_right.push_back(f.gt_depth_right);
  }
  state.pose_left = motions;
  state.pose_right = motions;
  return state;
}

}  // namespace absvo
