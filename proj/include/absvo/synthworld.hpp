#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absvo/geometry.hpp"
#include "absvo/image.hpp"
#include "absvo/losses.hpp"

namespace absvo {

enum class SceneKind {
  FrontoParallel,  // one textured plane at z = depth
  Stairs,          // near plane over the lower half (y >= 0) in front of a far plane
  Slanted,         // plane through (0, 0, depth) rotated about Y by slant_deg
};

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Sum of six sinusoids with fixed wavelengths and directions; the seed only
/// sets the phases.
struct TextureSpec {
  std::uint64_t seed = 0;
  double base_wavelength = 5.0;  // meters on the plane
  double amplitude = 0.06;       // per sinusoid, around a 0.5 mean
};

struct SceneSpec {
  SceneKind kind = SceneKind::FrontoParallel;
  double depth = 10.0;      // plane depth; near plane for stairs
  double far_depth = 20.0;  // stairs only
  double slant_deg = 30.0;  // slanted only
  TextureSpec texture;
  int width = 64;
  int height = 32;
  int channels = 1;
  StereoRig rig;

  void validate() const;
};

/// Rig matching an image size: fx = fy = 0.75 * width, centred principal
/// point, KITTI-like 0.54 m baseline.
StereoRig default_rig(int width, int height, double baseline = 0.54);

struct RenderedFrame {
  ImageBuffer left;
  ImageBuffer right;
  DepthMap gt_depth_left;
  DepthMap gt_depth_right;
  RigidTransform camera_pose_world;  // left camera to world
};

/// Texture intensity at plane coordinates (s1, s2) for one channel.
double texture_value(const TextureSpec& texture, double s1, double s2, int channel);

/// Ray-casts the scene for both cameras. Throws DegenerateGeometry when a ray
/// is parallel to a plane it must hit or misses the scene.
RenderedFrame render_frame(const SceneSpec& spec, const RigidTransform& camera_pose);

/// motions[k] maps frame-k camera coordinates to frame-(k+1) coordinates.
/// Frame 0 sits at the world origin.
std::vector<RenderedFrame> render_sequence(const SceneSpec& spec,
                                           const std::vector<Pose6DoF>& motions);

SequenceObservation make_observation(const std::vector<RenderedFrame>& frames,
                                     const StereoRig& rig);
/// Ground-truth depths and motions as optimisation state.
SequenceState ground_truth_state(const std::vector<RenderedFrame>& frames,
                                 const std::vector<Pose6DoF>& motions);

}  // namespace absvo
