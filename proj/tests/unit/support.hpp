#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "absvo/synthworld.hpp"

namespace testing {

inline absvo::SceneSpec small_scene(absvo::SceneKind kind = absvo::SceneKind::FrontoParallel) {
  absvo::SceneSpec spec;
  spec.kind = kind;
  spec.rig = absvo::default_rig(spec.width, spec.height);
  return spec;
}

inline absvo::Pose6DoF forward(double metres) {
  absvo::Pose6DoF p;
  p.translation = absvo::Vec3(0.0, 0.0, -metres);
  return p;
}

inline absvo::RigidTransform random_transform(std::mt19937_64& rng, double angle = 3.0,
                                              double trans = 10.0) {
  std::uniform_real_distribution<double> a(-angle, angle), t(-trans, trans);
  absvo::Pose6DoF p;
  p.translation = absvo::Vec3(t(rng), t(rng), t(rng));
  p.rotation = absvo::Vec3(a(rng), a(rng) / 2.0, a(rng));
  return absvo::euler_to_matrix(p);
}

// Smooth image sampled from a fixed low-frequency function.
inline absvo::ImageBuffer smooth_image(int h, int w, int channels = 1) {
  absvo::ImageBuffer img(h, w, channels);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < channels; ++ch)
        img.at(r, c, ch) = 0.5 + 0.2 * std::sin(0.31 * c + 0.7 * ch) * std::cos(0.23 * r) +
                           0.05 * std::sin(0.11 * (r + c));
  return img;
}

}  // namespace testing
