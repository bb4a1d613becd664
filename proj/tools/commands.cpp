#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "absvo/config.hpp"
#include "absvo/errors.hpp"
#include "absvo/io_formats.hpp"
#include "absvo/optimizer.hpp"
#include "absvo/synthworld.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace absvo::cli {

namespace {

std::string image_ext(int channels) { return channels == 1 ? "pgm" : "ppm"; }

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir + "'");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json config_json(const RunConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config_entries(config)) j[k] = v;
  return j;
}

RunConfig config_from_json(const ordered_json& j) {
  std::string text;
  for (const auto& [k, v] : j.items()) text += k + " = " + v.get<std::string>() + "\n";
  return parse_config(text);
}

void apply_seed(RunConfig& config, bool has_seed, long long seed) {
  if (!has_seed) return;
  if (seed < 0) throw ConfigError("--seed must be non-negative");
  config.seed = static_cast<std::uint64_t>(seed);
  config.scene.texture.seed = config.seed;
}

void write_manifest(const std::string& dir, const ordered_json& manifest) {
  write_file(join(dir, "manifest.json"), manifest.dump(2) + "\n");
}

// Frame count from consecutive left images in a synth output directory.
int count_frames(const std::string& dir, const std::string& ext) {
  int n = 0;
  while (fs::exists(join(dir, frame_name("left", n, ext)))) ++n;
  return n;
}

std::vector<Pose6DoF> motions_from_trajectory(const Trajectory& traj) {
  std::vector<Pose6DoF> motions;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i)
    motions.push_back(matrix_to_pose(traj.poses[i + 1].inverse() * traj.poses[i]));
  return motions;
}

Trajectory trajectory_from_poses(const std::vector<Pose6DoF>& motions) {
  std::vector<RigidTransform> transforms;
  for (const auto& m : motions) transforms.push_back(euler_to_matrix(m));
  return trajectory_from_motions(transforms);
}

AlignMode parse_align(const std::string& s) {
  if (s == "none") return AlignMode::None;
  if (s == "6dof") return AlignMode::SixDof;
  if (s == "7dof") return AlignMode::SevenDof;
  throw InputError("--align must be none, 6dof or 7dof");
}

}  // namespace

std::string frame_name(const std::string& prefix, int index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%06d.", index);
  return prefix + buf + ext;
}

void cmd_synth(const SynthArgs& args, std::ostream& log) {
  RunConfig config = args.config.empty() ? RunConfig() : load_config(args.config);
  apply_seed(config, args.has_seed, args.seed);
  config.validate();
  ensure_dir(args.out);

  const auto motions = config.motions();
  const auto frames = render_sequence(config.scene, motions);
  const std::string ext = image_ext(config.scene.channels);

  ordered_json outputs = ordered_json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const int idx = static_cast<int>(i);
    const std::pair<std::string, const ImageBuffer*> images[] = {
        {frame_name("left", idx, ext), &frames[i].left},
        {frame_name("right", idx, ext), &frames[i].right}};
    for (const auto& [name, img] : images) {
      write_image(*img, join(args.out, name));
      outputs.push_back(name);
    }
    const std::pair<std::string, const DepthMap*> depths[] = {
        {frame_name("depth_left", idx, "pfm"), &frames[i].gt_depth_left},
        {frame_name("depth_right", idx, "pfm"), &frames[i].gt_depth_right}};
    for (const auto& [name, d] : depths) {
      write_depth(*d, join(args.out, name));
      outputs.push_back(name);
    }
  }
  Trajectory traj;
  for (const auto& f : frames) traj.poses.push_back(f.camera_pose_world);
  write_poses(traj, join(args.out, "poses.txt"));
  outputs.push_back("poses.txt");

  ordered_json manifest;
  manifest["command"] = "synth";
  manifest["seed"] = config.seed;
  manifest["config"] = config_json(config);
  manifest["inputs"] = {{"config", args.config}};
  manifest["outputs"] = outputs;
  manifest["metrics"] = {{"frames", frames.size()},
                         {"width", config.scene.width},
                         {"height", config.scene.height}};
  write_manifest(args.out, manifest);
  log << "synth: wrote " << frames.size() << " frames to " << args.out << "\n";
}

void cmd_optimize(const OptimizeArgs& args, std::ostream& log) {
  if (!fs::is_directory(args.in)) throw InputError("input directory '" + args.in + "' not found");
  RunConfig config;
  if (!args.config.empty()) {
    config = load_config(args.config);
  } else {
    const std::string path = join(args.in, "manifest.json");
    ordered_json manifest;
    try {
      manifest = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("cannot parse '" + path + "': " + e.what());
    }
    if (!manifest.contains("config") || !manifest["config"].is_object())
      throw ParseError("'" + path + "' has no config object");
    config = config_from_json(manifest["config"]);
  }
  apply_seed(config, args.has_seed, args.seed);
  config.validate();

  const std::string ext = image_ext(config.scene.channels);
  const int n = count_frames(args.in, ext);
  if (n < 2) throw InputError("input directory needs at least 2 frames (" + frame_name("left", 0, ext) + ", ...)");

  SequenceObservation obs;
  obs.rig = config.scene.rig;
  for (int i = 0; i < n; ++i) {
    StereoImages pair{read_image(join(args.in, frame_name("left", i, ext))),
                      read_image(join(args.in, frame_name("right", i, ext)))};
    if (pair.left.width() != config.scene.width || pair.left.height() != config.scene.height ||
        !pair.left.same_shape(pair.right))
      throw DimensionMismatch("frame " + std::to_string(i) + " does not match the configured size");
    obs.frames.push_back(std::move(pair));
  }

  SequenceState init;
  if (config.init == InitMode::GroundTruth) {
    for (int i = 0; i < n; ++i) {
      init.depth_left.push_back(read_depth(join(args.in, frame_name("depth_left", i, "pfm"))));
      init.depth_right.push_back(read_depth(join(args.in, frame_name("depth_right", i, "pfm"))));
    }
    const Trajectory gt = read_poses(join(args.in, "poses.txt"));
    if (gt.size() != static_cast<std::size_t>(n))
      throw LengthMismatch("poses.txt has " + std::to_string(gt.size()) + " poses for " +
                           std::to_string(n) + " frames");
    init.pose_left = motions_from_trajectory(gt);
    init.pose_right = init.pose_left;
  } else {
    init = default_initial_state(obs, config.init_depth);
  }

  ensure_dir(args.out);
  const JointEstimate est = optimize_joint(obs, init, config.optimizer);

  ordered_json outputs = ordered_json::array();
  for (int i = 0; i < n; ++i) {
    for (const auto& [prefix, maps] :
         {std::pair{"depth_left", &est.state.depth_left}, std::pair{"depth_right", &est.state.depth_right}}) {
      const std::string name = frame_name(prefix, i, "pfm");
      write_depth((*maps)[static_cast<std::size_t>(i)], join(args.out, name));
      outputs.push_back(name);
    }
  }
  write_poses(trajectory_from_poses(est.state.pose_left), join(args.out, "poses.txt"));
  write_poses(trajectory_from_poses(est.state.pose_right), join(args.out, "poses_right.txt"));
  outputs.push_back("poses.txt");
  outputs.push_back("poses_right.txt");

  std::string csv = "iteration,spatial_photo,disparity,pose,temporal_photo,geometric,total\n";
  for (const auto& r : est.summary.history)
    csv += std::to_string(r.iteration) + "," + sci(r.spatial_photo) + "," + sci(r.disparity) + "," +
           sci(r.pose) + "," + sci(r.temporal_photo) + "," + sci(r.geometric) + "," +
           sci(r.total) + "\n";
  write_file(join(args.out, "loss_history.csv"), csv);
  outputs.push_back("loss_history.csv");

  ordered_json manifest;
  manifest["command"] = "optimize";
  manifest["seed"] = config.seed;
  manifest["config"] = config_json(config);
  manifest["inputs"] = {{"in", args.in}, {"config", args.config}};
  manifest["outputs"] = outputs;
  manifest["metrics"] = {{"frames", n},
                         {"initial_loss", est.summary.initial_loss},
                         {"final_loss", est.summary.final_loss},
                         {"iterations", est.summary.iterations},
                         {"converged", est.summary.converged},
                         {"max_translation_disagreement", est.max_translation_disagreement},
                         {"max_rotation_disagreement", est.max_rotation_disagreement}};
  write_manifest(args.out, manifest);
  log << "optimize: " << est.summary.iterations << " iterations, loss "
      << sci(est.summary.initial_loss) << " -> " << sci(est.summary.final_loss) << "\n";
}

void cmd_eval_traj(const EvalTrajArgs& args, std::ostream& out, std::ostream& log) {
  const AlignMode mode = parse_align(args.align);
  std::vector<std::string> warnings;
  const Trajectory est = read_poses(args.estimate, &warnings);
  const Trajectory ref = read_poses(args.reference, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  if (est.size() != ref.size())
    throw LengthMismatch("trajectories differ in length (" + std::to_string(est.size()) + " vs " +
                         std::to_string(ref.size()) + ")");
  if (ref.size() < 2) throw TooShort("trajectory too short: need at least 2 poses");

  const Alignment aligned = align(est, ref, mode);
  const DriftReport report = drift_metrics(aligned.aligned, ref);

  std::ostringstream text;
  text << "alignment " << args.align << " scale " << fixed(aligned.transform.scale, 6)
       << " position_rmse " << fixed(aligned.rmse, 6) << "\n";
  text << "t_rel " << fixed(report.t_rel, 2) << " %\n";
  text << "r_rel " << fixed(report.r_rel, 2) << " deg/100m\n";
  text << "segments " << report.segments << "\n";
  std::string csv = "length_m,segments,t_rel_percent,r_rel_deg_per_100m\n";
  for (const auto& l : report.per_length)
    csv += fixed(l.length, 0) + "," + std::to_string(l.segments) + "," + sci(l.t_rel) + "," +
           sci(l.r_rel) + "\n";
  csv += "all," + std::to_string(report.segments) + "," + sci(report.t_rel) + "," +
         sci(report.r_rel) + "\n";
  out << text.str() << csv;

  if (!args.out.empty()) {
    ensure_dir(args.out);
    write_file(join(args.out, "drift_report.txt"), text.str());
    write_file(join(args.out, "drift.csv"), csv);
    write_file(join(args.out, "trajectory.svg"), trajectory_svg(aligned.aligned, ref));
  }
}

void cmd_eval_depth(const EvalDepthArgs& args, std::ostream& out, std::ostream& log) {
  if (!(args.cap > 0.0)) throw InputError("--cap must be positive");
  for (const auto* d : {&args.pred, &args.gt})
    if (!fs::is_directory(*d)) throw InputError("directory '" + *d + "' not found");

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(args.gt))
    if (entry.is_regular_file() && entry.path().extension() == ".pfm")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InputError("no .pfm files in '" + args.gt + "'");
  for (const auto& name : names)
    if (!fs::exists(join(args.pred, name)))
      throw InputError("prediction '" + name + "' missing from '" + args.pred + "'");

  std::string csv = "frame,abs_rel,sq_rel,rmse,rmse_log,pixels,scale\n";
  double sums[4] = {0, 0, 0, 0};
  std::size_t used = 0;
  for (const auto& name : names) {
    const DepthMap gt = read_depth(join(args.gt, name));
    const DepthMap pred = read_depth(join(args.pred, name));
    DepthEvalReport r;
    try {
      r = depth_metrics(pred, gt, args.cap, args.median_scale);
    } catch (const EmptyMask&) {
      log << "warning: " << name << " has no ground truth within the cap; skipped\n";
      continue;
    }
    csv += name + "," + sci(r.abs_rel) + "," + sci(r.sq_rel) + "," + sci(r.rmse) + "," +
           sci(r.rmse_log) + "," + std::to_string(r.pixels) + "," + sci(r.scale) + "\n";
    sums[0] += r.abs_rel;
    sums[1] += r.sq_rel;
    sums[2] += r.rmse;
    sums[3] += r.rmse_log;
    ++used;
  }
  if (used == 0) throw EmptyMask("no frame has ground truth within the cap");
  const double k = static_cast<double>(used);
  csv += "mean," + sci(sums[0] / k) + "," + sci(sums[1] / k) + "," + sci(sums[2] / k) + "," +
         sci(sums[3] / k) + "," + std::to_string(used) + ",\n";
  out << csv;
  if (!args.out.empty()) {
    ensure_dir(args.out);
    write_file(join(args.out, "depth_metrics.csv"), csv);
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo/temporal geometric-loss visual odometry toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render a synthetic stereo sequence");
  s->add_option("--config", synth.config, "Config file")->check(CLI::ExistingFile);
  s->add_option("--seed", synth.seed, "Texture/run seed")->each([&](const std::string&) { synth.has_seed = true; });
  s->add_option("--out", synth.out, "Output directory")->required();

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "Jointly optimise depths and poses of a sequence");
  o->add_option("--in", opt.in, "Directory written by synth")->required();
  o->add_option("--config", opt.config, "Config file (default: input manifest)")->check(CLI::ExistingFile);
  o->add_option("--seed", opt.seed, "Run seed")->each([&](const std::string&) { opt.has_seed = true; });
  o->add_option("--out", opt.out, "Output directory")->required();

  EvalTrajArgs traj;
  auto* t = app.add_subcommand("eval-traj", "Segment drift between two pose files");
  t->add_option("--est", traj.estimate, "Estimated poses")->required();
  t->add_option("--ref", traj.reference, "Reference poses")->required();
  t->add_option("--align", traj.align, "none, 6dof or 7dof")->check(CLI::IsMember({"none", "6dof", "7dof"}));
  t->add_option("--out", traj.out, "Directory for report, CSV and SVG");

  EvalDepthArgs depth;
  auto* d = app.add_subcommand("eval-depth", "Depth error metrics between two PFM directories");
  d->add_option("--pred", depth.pred, "Predicted depth directory")->required();
  d->add_option("--gt", depth.gt, "Ground-truth depth directory")->required();
  d->add_option("--cap", depth.cap, "Maximum ground-truth depth (m)");
  d->add_flag("--median-scale", depth.median_scale, "Rescale predictions by the median ratio");
  d->add_option("--out", depth.out, "Directory for the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*s) cmd_synth(synth, err);
    if (*o) cmd_optimize(opt, err);
    if (*t) cmd_eval_traj(traj, out, err);
    if (*d) cmd_eval_depth(depth, out, err);
  } catch (const TooShort& e) {
    err << "error (too short): " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace absvo::cli
