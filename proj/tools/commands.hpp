#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "absvo/evaluation.hpp"

namespace absvo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

struct SynthArgs {
  std::string config;  // empty: defaults
  std::string out;
  bool has_seed = false;
  long long seed = 0;
};

struct OptimizeArgs {
  std::string in;
  std::string config;  // empty: resolved config from the input manifest
  std::string out;
  bool has_seed = false;
  long long seed = 0;
};

struct EvalTrajArgs {
  std::string estimate;
  std::string reference;
  std::string align = "none";
  std::string out;  // optional: report, CSV and SVG are written here
};

struct EvalDepthArgs {
  std::string pred;
  std::string gt;
  double cap = 80.0;
  bool median_scale = false;
  std::string out;  // optional CSV destination directory
};

void cmd_synth(const SynthArgs& args, std::ostream& log);
void cmd_optimize(const OptimizeArgs& args, std::ostream& log);
void cmd_eval_traj(const EvalTrajArgs& args, std::ostream& out, std::ostream& log);
void cmd_eval_depth(const EvalDepthArgs& args, std::ostream& out, std::ostream& log);

/// Parses argv, dispatches, and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Top-down (x-z) overlay of two trajectories: two polylines and a scale bar.
std::string trajectory_svg(const Trajectory& estimate, const Trajectory& reference);

std::string frame_name(const std::string& prefix, int index, const std::string& ext);

}  // namespace absvo::cli
