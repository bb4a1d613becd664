#include "absvo/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

#include "absvo/errors.hpp"
#include "absvo/io_formats.hpp"

namespace absvo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return i;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Intermediate parse target; the rig is resolved after the image size.
struct Draft {
  RunConfig config;
  double baseline = 0.54;
  std::optional<double> fx, fy, cx, cy;
};

using Setter = std::function<void(Draft&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto real = [&t](const std::string& name, std::function<double&(Draft&)> field) {
      t.emplace_back(name, [field](Draft& d, const std::string& k, const std::string& v) {
        field(d) = to_double(k, v);
      });
    };
    auto integer = [&t](const std::string& name, std::function<int&(Draft&)> field) {
      t.emplace_back(name, [field](Draft& d, const std::string& k, const std::string& v) {
        const long long i = to_integer(k, v);
        if (i < -1000000 || i > 1000000) throw ConfigError("config key '" + k + "': out of range");
        field(d) = static_cast<int>(i);
      });
    };
    auto optional_real = [&t](const std::string& name,
                              std::function<std::optional<double>&(Draft&)> field) {
      t.emplace_back(name, [field](Draft& d, const std::string& k, const std::string& v) {
        field(d) = to_double(k, v);
      });
    };
    auto degrees = [&t](const std::string& name, std::function<double&(Draft&)> field) {
      t.emplace_back(name, [field](Draft& d, const std::string& k, const std::string& v) {
        field(d) = to_double(k, v) * kDegToRad;
      });
    };

    t.emplace_back("scene", [](Draft& d, const std::string& k, const std::string& v) {
      try {
        d.config.scene.kind = scene_kind_from_string(v);
      } catch (const ConfigError& e) {
        throw ConfigError("config key '" + k + "': " + e.what());
      }
    });
    real("depth", [](Draft& d) -> double& { return d.config.scene.depth; });
    real("far_depth", [](Draft& d) -> double& { return d.config.scene.far_depth; });
    real("slant_deg", [](Draft& d) -> double& { return d.config.scene.slant_deg; });
    real("texture_wavelength",
         [](Draft& d) -> double& { return d.config.scene.texture.base_wavelength; });
    real("texture_amplitude", [](Draft& d) -> double& { return d.config.scene.texture.amplitude; });
    integer("width", [](Draft& d) -> int& { return d.config.scene.width; });
    integer("height", [](Draft& d) -> int& { return d.config.scene.height; });
    integer("channels", [](Draft& d) -> int& { return d.config.scene.channels; });
    real("baseline", [](Draft& d) -> double& { return d.baseline; });
    optional_real("fx", [](Draft& d) -> std::optional<double>& { return d.fx; });
    optional_real("fy", [](Draft& d) -> std::optional<double>& { return d.fy; });
    optional_real("cx", [](Draft& d) -> std::optional<double>& { return d.cx; });
    optional_real("cy", [](Draft& d) -> std::optional<double>& { return d.cy; });
    integer("frames", [](Draft& d) -> int& { return d.config.frames; });
    real("motion_tx", [](Draft& d) -> double& { return d.config.motion.translation.x(); });
    real("motion_ty", [](Draft& d) -> double& { return d.config.motion.translation.y(); });
    real("motion_tz", [](Draft& d) -> double& { return d.config.motion.translation.z(); });
    degrees("motion_roll_deg", [](Draft& d) -> double& { return d.config.motion.rotation.x(); });
    degrees("motion_pitch_deg", [](Draft& d) -> double& { return d.config.motion.rotation.y(); });
    degrees("motion_yaw_deg", [](Draft& d) -> double& { return d.config.motion.rotation.z(); });
    real("lambda_s", [](Draft& d) -> double& { return d.config.optimizer.weights.lambda_s; });
    real("lambda_p", [](Draft& d) -> double& { return d.config.optimizer.weights.lambda_p; });
    real("lambda_o", [](Draft& d) -> double& { return d.config.optimizer.weights.lambda_o; });
    real("w_spatial_photo",
         [](Draft& d) -> double& { return d.config.optimizer.weights.w_spatial_photo; });
    real("w_disp", [](Draft& d) -> double& { return d.config.optimizer.weights.w_disp; });
    real("w_pose", [](Draft& d) -> double& { return d.config.optimizer.weights.w_pose; });
    real("w_temporal_photo",
         [](Draft& d) -> double& { return d.config.optimizer.weights.w_temporal_photo; });
    real("w_geo", [](Draft& d) -> double& { return d.config.optimizer.weights.w_geo; });
    real("learning_rate", [](Draft& d) -> double& { return d.config.optimizer.schedule.initial_lr; });
    integer("iterations",
            [](Draft& d) -> int& { return d.config.optimizer.schedule.total_iterations; });
    real("rotation_weight", [](Draft& d) -> double& { return d.config.optimizer.rotation_weight; });
    real("convergence_tolerance",
         [](Draft& d) -> double& { return d.config.optimizer.convergence_tolerance; });
    integer("convergence_window",
            [](Draft& d) -> int& { return d.config.optimizer.convergence_window; });
    t.emplace_back("init", [](Draft& d, const std::string& k, const std::string& v) {
      if (v == "flat") {
        d.config.init = InitMode::Flat;
      } else if (v == "gt") {
        d.config.init = InitMode::GroundTruth;
      } else {
        throw ConfigError("config key '" + k + "': expected flat or gt, got '" + v + "'");
      }
    });
    real("init_depth", [](Draft& d) -> double& { return d.config.init_depth; });
    t.emplace_back("seed", [](Draft& d, const std::string& k, const std::string& v) {
      const long long s = to_integer(k, v);
      if (s < 0) throw ConfigError("config key '" + k + "': must be non-negative");
      d.config.seed = static_cast<std::uint64_t>(s);
      d.config.scene.texture.seed = d.config.seed;
    });
    return t;
  }();
  return table;
}

}  // namespace

RunConfig::RunConfig() {
  scene.rig = default_rig(scene.width, scene.height);
  motion.translation = Vec3(0.0, 0.0, -0.1);
}

std::vector<Pose6DoF> RunConfig::motions() const {
  return std::vector<Pose6DoF>(frames > 1 ? static_cast<std::size_t>(frames - 1) : 0, motion);
}

void RunConfig::validate() const {
  scene.validate();
  optimizer.validate();
  if (frames < 1 || frames > 1000) throw ConfigError("frames must lie in [1, 1000]");
  if (!(init_depth > 0.0)) throw ConfigError("init_depth must be positive");
  if (scene.texture.seed != seed) throw ConfigError("texture seed must match the run seed");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", line_no);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
    if (!out.emplace(key, value).second)
      throw ConfigError("duplicate config key '" + key + "' (line " + std::to_string(line_no) + ")");
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  const auto pairs = parse_key_values(text);
  const auto& table = setters();
  for (const auto& [key, value] : pairs) {
    bool known = false;
    for (const auto& [name, setter] : table) known = known || name == key;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }

  Draft draft;
  // Table order, so the result does not depend on file order.
  for (const auto& [name, setter] : table) {
    const auto it = pairs.find(name);
    if (it != pairs.end()) setter(draft, name, it->second);
  }

  RunConfig& config = draft.config;
  if (!(draft.baseline > 0.0)) throw ConfigError("config key 'baseline': must be positive");
  if (config.scene.width < 16 || config.scene.height < 16)
    throw ConfigError("config keys 'width'/'height': image size must be at least 16x16");
  config.scene.rig = default_rig(config.scene.width, config.scene.height, draft.baseline);
  Intrinsics& k = config.scene.rig.intrinsics;
  if (draft.fx) k.fx = *draft.fx;
  if (draft.fy) k.fy = *draft.fy;
  if (draft.cx) k.cx = *draft.cx;
  if (draft.cy) k.cy = *draft.cy;
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  const auto& k = c.scene.rig.intrinsics;
  const auto& w = c.optimizer.weights;
  const double rad_to_deg = 1.0 / kDegToRad;
  return {
      {"scene", to_string(c.scene.kind)},
      {"depth", format_double(c.scene.depth)},
      {"far_depth", format_double(c.scene.far_depth)},
      {"slant_deg", format_double(c.scene.slant_deg)},
      {"texture_wavelength", format_double(c.scene.texture.base_wavelength)},
      {"texture_amplitude", format_double(c.scene.texture.amplitude)},
      {"width", std::to_string(c.scene.width)},
      {"height", std::to_string(c.scene.height)},
      {"channels", std::to_string(c.scene.channels)},
      {"baseline", format_double(c.scene.rig.baseline)},
      {"fx", format_double(k.fx)},
      {"fy", format_double(k.fy)},
      {"cx", format_double(k.cx)},
      {"cy", format_double(k.cy)},
      {"frames", std::to_string(c.frames)},
      {"motion_tx", format_double(c.motion.translation.x())},
      {"motion_ty", format_double(c.motion.translation.y())},
      {"motion_tz", format_double(c.motion.translation.z())},
      {"motion_roll_deg", format_double(c.motion.rotation.x() * rad_to_deg)},
      {"motion_pitch_deg", format_double(c.motion.rotation.y() * rad_to_deg)},
      {"motion_yaw_deg", format_double(c.motion.rotation.z() * rad_to_deg)},
      {"lambda_s", format_double(w.lambda_s)},
      {"lambda_p", format_double(w.lambda_p)},
      {"lambda_o", format_double(w.lambda_o)},
      {"w_spatial_photo", format_double(w.w_spatial_photo)},
      {"w_disp", format_double(w.w_disp)},
      {"w_pose", format_double(w.w_pose)},
      {"w_temporal_photo", format_double(w.w_temporal_photo)},
      {"w_geo", format_double(w.w_geo)},
      {"learning_rate", format_double(c.optimizer.schedule.initial_lr)},
      {"iterations", std::to_string(c.optimizer.schedule.total_iterations)},
      {"rotation_weight", format_double(c.optimizer.rotation_weight)},
      {"convergence_tolerance", format_double(c.optimizer.convergence_tolerance)},
      {"convergence_window", std::to_string(c.optimizer.convergence_window)},
      {"init", c.init == InitMode::Flat ? "flat" : "gt"},
      {"init_depth", format_double(c.init_depth)},
      {"seed", std::to_string(c.seed)},
  };
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, setter] : setters()) keys.push_back(name);
  return keys;
}

}  // namespace absvo
