#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "absvo/optimizer.hpp"
#include "absvo/synthworld.hpp"

namespace absvo {

enum class InitMode { Flat, GroundTruth };

/// Everything a synth or optimize run needs.
struct RunConfig {
  SceneSpec scene;
  int frames = 3;
  Pose6DoF motion;  // applied between every pair of frames
  OptimizerSettings optimizer;
  InitMode init = InitMode::Flat;
  double init_depth = 10.0;
  std::uint64_t seed = 0;

  RunConfig();

  /// Per-pair motions for the sequence (frames - 1 copies of motion).
  std::vector<Pose6DoF> motions() const;
  void validate() const;
};

/// Raw `key = value` pairs. '#' starts a comment; blank lines are ignored.
/// Throws ParseError (with line) on malformed lines and ConfigError on
/// duplicate keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies parsed pairs on top of the defaults. Unknown keys and invalid
/// values throw ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every recognised key with its resolved value, in a stable order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

/// Names of all recognised keys.
std::vector<std::string> config_keys();

}  // namespace absvo
