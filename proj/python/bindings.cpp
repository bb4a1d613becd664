#include <array>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "absvo/config.hpp"
#include "absvo/errors.hpp"
#include "absvo/evaluation.hpp"
#include "absvo/io_formats.hpp"
#include "absvo/losses.hpp"
#include "absvo/optimizer.hpp"
#include "absvo/synthworld.hpp"

namespace py = pybind11;
using namespace absvo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Mat4 = Eigen::Matrix4d;
using Pose6 = std::array<double, 6>;

// (H, W) or (H, W, C) arrays.
ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw DimensionMismatch("image must be (H, W) or (H, W, C)");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return ImageBuffer(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() != 1) shape.push_back(img.channels());
  Array out(shape);
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

DepthMap to_map(const Array& a) {
  if (a.ndim() != 2) throw DimensionMismatch("depth must be (H, W)");
  return DepthMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                  std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_map(const ScalarMap& m) {
  Array out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Mat4 to_mat4(const RigidTransform& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = t.rotation;
  m.topRightCorner<3, 1>() = t.translation;
  return m;
}

RigidTransform from_mat4(const Eigen::MatrixXd& m) {
  if (!((m.rows() == 4 || m.rows() == 3) && m.cols() == 4)) throw DimensionMismatch("pose must be 3x4 or 4x4");
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

Trajectory to_trajectory(const std::vector<Eigen::MatrixXd>& poses) {
  Trajectory t;
  for (const auto& p : poses) t.poses.push_back(from_mat4(p));
  return t;
}

std::vector<Mat4> from_trajectory(const Trajectory& t) {
  std::vector<Mat4> out;
  for (const auto& p : t.poses) out.push_back(to_mat4(p));
  return out;
}

std::vector<Pose6DoF> to_poses(const std::vector<Pose6>& v) {
  std::vector<Pose6DoF> out;
  for (const auto& p : v) out.push_back(Pose6DoF::from_array(p));
  return out;
}

std::vector<Pose6> from_poses(const std::vector<Pose6DoF>& v) {
  std::vector<Pose6> out;
  for (const auto& p : v) out.push_back(p.to_array());
  return out;
}

SequenceObservation to_observation(const std::vector<Array>& lefts, const std::vector<Array>& rights,
                                   const StereoRig& rig) {
  if (lefts.size() != rights.size()) throw LengthMismatch("left and right sequences differ in length");
  SequenceObservation obs;
  obs.rig = rig;
  for (std::size_t i = 0; i < lefts.size(); ++i) obs.frames.push_back({to_image(lefts[i]), to_image(rights[i])});
  return obs;
}

SequenceState to_state(const std::vector<Array>& depth_left, const std::vector<Array>& depth_right,
                       const std::vector<Pose6>& pose_left, const std::vector<Pose6>& pose_right) {
  SequenceState s;
  for (const auto& d : depth_left) s.depth_left.push_back(to_map(d));
  for (const auto& d : depth_right) s.depth_right.push_back(to_map(d));
  s.pose_left = to_poses(pose_left);
  s.pose_right = to_poses(pose_right);
  return s;
}

py::dict summary_dict(const OptimizationSummary& s) {
  Array history({static_cast<py::ssize_t>(s.history.size()), py::ssize_t{7}});
  auto h = history.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const LossRecord& r = s.history[i];
    const double row[7] = {double(r.iteration), r.spatial_photo, r.disparity, r.pose,
                           r.temporal_photo, r.geometric, r.total};
    for (int j = 0; j < 7; ++j) h(i, j) = row[j];
  }
  py::dict d;
  d["initial_loss"] = s.initial_loss;
  d["final_loss"] = s.final_loss;
  d["iterations"] = s.iterations;
  d["converged"] = s.converged;
  d["history"] = history;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Absolute-scale stereo visual odometry core";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto input = py::register_exception<InputError>(m, "InputError", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", input.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", input.ptr());
  py::register_exception<MalformedRotation>(m, "MalformedRotation", input.ptr());
  py::register_exception<UnsupportedFormat>(m, "UnsupportedFormat", input.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", input.ptr());
  py::register_exception<LengthMismatch>(m, "LengthMismatch", input.ptr());
  py::register_exception<TooShort>(m, "TooShort", input.ptr());
  py::register_exception<NonPositiveDepth>(m, "NonPositiveDepth", numerical.ptr());
  py::register_exception<NonPositiveDisparity>(m, "NonPositiveDisparity", numerical.ptr());
  py::register_exception<EmptyMask>(m, "EmptyMask", numerical.ptr());
  py::register_exception<Divergence>(m, "Divergence", numerical.ptr());
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", numerical.ptr());
  py::register_exception<DegenerateConfiguration>(m, "DegenerateConfiguration", numerical.ptr());

  py::class_<StereoRig>(m, "StereoRig")
      .def(py::init([](double fx, double fy, double cx, double cy, double baseline) {
             return StereoRig{{fx, fy, cx, cy}, baseline};
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("baseline"))
      .def_property("fx", [](const StereoRig& r) { return r.intrinsics.fx; }, [](StereoRig& r, double v) { r.intrinsics.fx = v; })
      .def_property("fy", [](const StereoRig& r) { return r.intrinsics.fy; }, [](StereoRig& r, double v) { r.intrinsics.fy = v; })
      .def_property("cx", [](const StereoRig& r) { return r.intrinsics.cx; }, [](StereoRig& r, double v) { r.intrinsics.cx = v; })
      .def_property("cy", [](const StereoRig& r) { return r.intrinsics.cy; }, [](StereoRig& r, double v) { r.intrinsics.cy = v; })
      .def_readwrite("baseline", &StereoRig::baseline)
      .def("__repr__", [](const StereoRig& r) {
        return "StereoRig(fx=" + std::to_string(r.intrinsics.fx) + ", fy=" + std::to_string(r.intrinsics.fy) +
               ", cx=" + std::to_string(r.intrinsics.cx) + ", cy=" + std::to_string(r.intrinsics.cy) +
               ", baseline=" + std::to_string(r.baseline) + ")";
      });
  m.def("default_rig", &default_rig, py::arg("width"), py::arg("height"), py::arg("baseline") = 0.54);

  py::class_<LossWeights>(m, "LossWeights")
      .def(py::init<>())
      .def_readwrite("lambda_s", &LossWeights::lambda_s)
      .def_readwrite("lambda_p", &LossWeights::lambda_p)
      .def_readwrite("lambda_o", &LossWeights::lambda_o)
      .def_readwrite("w_spatial_photo", &LossWeights::w_spatial_photo)
      .def_readwrite("w_disp", &LossWeights::w_disp)
      .def_readwrite("w_pose", &LossWeights::w_pose)
      .def_readwrite("w_temporal_photo", &LossWeights::w_temporal_photo)
      .def_readwrite("w_geo", &LossWeights::w_geo);

  py::class_<OptimizerSettings>(m, "OptimizerSettings")
      .def(py::init<>())
      .def_readwrite("weights", &OptimizerSettings::weights)
      .def_property("learning_rate", [](const OptimizerSettings& s) { return s.schedule.initial_lr; },
                    [](OptimizerSettings& s, double v) { s.schedule.initial_lr = v; })
      .def_property("iterations", [](const OptimizerSettings& s) { return s.schedule.total_iterations; },
                    [](OptimizerSettings& s, int v) { s.schedule.total_iterations = v; })
      .def_readwrite("rotation_weight", &OptimizerSettings::rotation_weight)
      .def_readwrite("convergence_tolerance", &OptimizerSettings::convergence_tolerance)
      .def_readwrite("convergence_window", &OptimizerSettings::convergence_window);

  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init<>())
      .def_property("kind", [](const SceneSpec& s) { return to_string(s.kind); },
                    [](SceneSpec& s, const std::string& k) { s.kind = scene_kind_from_string(k); })
      .def_readwrite("depth", &SceneSpec::depth)
      .def_readwrite("far_depth", &SceneSpec::far_depth)
      .def_readwrite("slant_deg", &SceneSpec::slant_deg)
      .def_readwrite("width", &SceneSpec::width)
      .def_readwrite("height", &SceneSpec::height)
      .def_readwrite("channels", &SceneSpec::channels)
      .def_readwrite("rig", &SceneSpec::rig)
      .def_property("seed", [](const SceneSpec& s) { return s.texture.seed; },
                    [](SceneSpec& s, std::uint64_t v) { s.texture.seed = v; })
      .def_property("texture_wavelength", [](const SceneSpec& s) { return s.texture.base_wavelength; },
                    [](SceneSpec& s, double v) { s.texture.base_wavelength = v; })
      .def_property("texture_amplitude", [](const SceneSpec& s) { return s.texture.amplitude; },
                    [](SceneSpec& s, double v) { s.texture.amplitude = v; })
      .def("validate", &SceneSpec::validate);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("scene", &RunConfig::scene)
      .def_readwrite("frames", &RunConfig::frames)
      .def_readwrite("optimizer", &RunConfig::optimizer)
      .def_readwrite("init_depth", &RunConfig::init_depth)
      .def_readonly("seed", &RunConfig::seed)
      .def_property_readonly("init", [](const RunConfig& c) { return c.init == InitMode::GroundTruth ? "gt" : "flat"; })
      .def("motions", [](const RunConfig& c) { return from_poses(c.motions()); })
      .def("entries", [](const RunConfig& c) { return config_entries(c); });
  m.def("parse_config", &parse_config, py::arg("text"), "Parses `key = value` text on top of the defaults.");
  m.def("load_config", &load_config, py::arg("path"));
  m.def("config_keys", &config_keys);

  m.def("euler_to_matrix", [](const Pose6& p) { return to_mat4(euler_to_matrix(Pose6DoF::from_array(p))); },
        py::arg("pose"), "(tx, ty, tz, roll, pitch, yaw) to a 4x4 transform.");
  m.def("matrix_to_pose", [](const Eigen::MatrixXd& t) {
        const RigidTransform r = from_mat4(t);
        Pose6DoF p;
        p.translation = r.translation;
        p.rotation = matrix_to_euler(r.rotation);
        return p.to_array();
      },
      py::arg("transform"));

  m.def("render_sequence", [](const SceneSpec& spec, const std::vector<Pose6>& motions) {
        py::list frames;
        for (const RenderedFrame& f : render_sequence(spec, to_poses(motions))) {
          py::dict d;
          d["left"] = from_image(f.left);
          d["right"] = from_image(f.right);
          d["depth_left"] = from_map(f.gt_depth_left);
          d["depth_right"] = from_map(f.gt_depth_right);
          d["pose"] = to_mat4(f.camera_pose_world);
          frames.append(d);
        }
        return frames;
      },
      py::arg("scene"), py::arg("motions") = std::vector<Pose6>{},
      "Renders frames 0..len(motions); motions map frame-k points to frame k+1.");

  m.def("total_loss",
        [](const std::vector<Array>& lefts, const std::vector<Array>& rights, const StereoRig& rig,
           const std::vector<Array>& depth_left, const std::vector<Array>& depth_right,
           const std::vector<Pose6>& pose_left, const std::vector<Pose6>& pose_right, const LossWeights& w) {
          const TotalLoss t = total_loss(to_observation(lefts, rights, rig),
                                         to_state(depth_left, depth_right, pose_left, pose_right), w);
          py::dict terms;
          for (const auto& [name, v] : t.components.terms) terms[py::str(name)] = v;
          py::list gl, gr;
          for (const auto& g : t.gradient.depth_left) gl.append(from_map(g));
          for (const auto& g : t.gradient.depth_right) gr.append(from_map(g));
          py::dict d;
          d["spatial_photo"] = t.components.spatial_photo;
          d["disparity"] = t.components.disparity;
          d["pose"] = t.components.pose;
          d["temporal_photo"] = t.components.temporal_photo;
          d["geometric"] = t.components.geometric;
          d["total"] = t.components.total;
          d["terms"] = terms;
          d["grad_depth_left"] = gl;
          d["grad_depth_right"] = gr;
          d["grad_pose_left"] = t.gradient.pose_left;
          d["grad_pose_right"] = t.gradient.pose_right;
          return d;
        },
        py::arg("lefts"), py::arg("rights"), py::arg("rig"), py::arg("depth_left"), py::arg("depth_right"),
        py::arg("pose_left"), py::arg("pose_right"), py::arg("weights") = LossWeights{});

  m.def("optimize_depth_stereo",
        [](const Array& left, const Array& right, const StereoRig& rig, const Array& init,
           const OptimizerSettings& settings) {
          DepthEstimate e;
          {
            py::gil_scoped_release release;
            e = optimize_depth_stereo({to_image(left), to_image(right)}, rig, to_map(init), settings);
          }
          py::dict d = summary_dict(e.summary);
          d["depth_left"] = from_map(e.depth_left);
          d["depth_right"] = from_map(e.depth_right);
          return d;
        },
        py::arg("left"), py::arg("right"), py::arg("rig"), py::arg("init"),
        py::arg("settings") = OptimizerSettings{});

  m.def("optimize_pose_temporal",
        [](const Array& image_k, const Array& image_k1, const Array& depth_k, std::optional<Array> depth_k1,
           const StereoRig& rig, const Pose6& init, const OptimizerSettings& settings) {
          PoseEstimate e;
          const DepthMap dk1 = depth_k1 ? to_map(*depth_k1) : DepthMap();
          {
            py::gil_scoped_release release;
            e = optimize_pose_temporal(to_image(image_k), to_image(image_k1), to_map(depth_k), dk1,
                                       rig.intrinsics, Pose6DoF::from_array(init), settings);
          }
          py::dict d = summary_dict(e.summary);
          d["pose"] = e.pose.to_array();
          return d;
        },
        py::arg("image_k"), py::arg("image_k1"), py::arg("depth_k"), py::arg("depth_k1") = py::none(),
        py::arg("rig"), py::arg("init") = Pose6{}, py::arg("settings") = OptimizerSettings{});

  m.def("optimize_joint",
        [](const std::vector<Array>& lefts, const std::vector<Array>& rights, const StereoRig& rig,
           const std::vector<Array>& depth_left, const std::vector<Array>& depth_right,
           const std::vector<Pose6>& pose_left, const std::vector<Pose6>& pose_right,
           const OptimizerSettings& settings) {
          const SequenceObservation obs = to_observation(lefts, rights, rig);
          const SequenceState init = to_state(depth_left, depth_right, pose_left, pose_right);
          JointEstimate e;
          {
            py::gil_scoped_release release;
            e = optimize_joint(obs, init, settings);
          }
          py::dict d = summary_dict(e.summary);
          py::list dl, dr;
          for (const auto& m : e.state.depth_left) dl.append(from_map(m));
          for (const auto& m : e.state.depth_right) dr.append(from_map(m));
          d["depth_left"] = dl;
          d["depth_right"] = dr;
          d["pose_left"] = from_poses(e.state.pose_left);
          d["pose_right"] = from_poses(e.state.pose_right);
          d["max_translation_disagreement"] = e.max_translation_disagreement;
          d["max_rotation_disagreement"] = e.max_rotation_disagreement;
          return d;
        },
        py::arg("lefts"), py::arg("rights"), py::arg("rig"), py::arg("depth_left"), py::arg("depth_right"),
        py::arg("pose_left"), py::arg("pose_right"), py::arg("settings") = OptimizerSettings{});

  m.def("trajectory_from_motions", [](const std::vector<Pose6>& motions) {
        std::vector<RigidTransform> t;
        for (const auto& p : motions) t.push_back(euler_to_matrix(Pose6DoF::from_array(p)));
        return from_trajectory(trajectory_from_motions(t));
      },
      py::arg("motions"));

  m.def("drift_metrics",
        [](const std::vector<Eigen::MatrixXd>& est, const std::vector<Eigen::MatrixXd>& ref) {
          const DriftReport r = drift_metrics(to_trajectory(est), to_trajectory(ref));
          py::list per;
          for (const auto& s : r.per_length) {
            py::dict row;
            row["length"] = s.length;
            row["segments"] = s.segments;
            row["t_rel"] = s.t_rel;
            row["r_rel"] = s.r_rel;
            per.append(row);
          }
          py::dict d;
          d["t_rel"] = r.t_rel;
          d["r_rel"] = r.r_rel;
          d["segments"] = r.segments;
          d["per_length"] = per;
          return d;
        },
        py::arg("estimate"), py::arg("reference"),
        "Segment drift: t_rel in percent, r_rel in degrees per 100 m.");

  m.def("align",
        [](const std::vector<Eigen::MatrixXd>& est, const std::vector<Eigen::MatrixXd>& ref, const std::string& mode) {
          AlignMode am = AlignMode::None;
          if (mode == "6dof")
            am = AlignMode::SixDof;
          else if (mode == "7dof")
            am = AlignMode::SevenDof;
          else if (mode != "none")
            throw InputError("align mode must be none, 6dof or 7dof");
          const Alignment a = align(to_trajectory(est), to_trajectory(ref), am);
          py::dict d;
          d["aligned"] = from_trajectory(a.aligned);
          d["scale"] = a.transform.scale;
          d["rotation"] = Mat3(a.transform.rotation);
          d["translation"] = Vec3(a.transform.translation);
          d["rmse"] = a.rmse;
          return d;
        },
        py::arg("estimate"), py::arg("reference"), py::arg("mode") = "7dof");

  m.def("depth_metrics",
        [](const Array& pred, const Array& gt, double cap, bool median_scale) {
          const DepthEvalReport r = depth_metrics(to_map(pred), to_map(gt), cap, median_scale);
          py::dict d;
          d["abs_rel"] = r.abs_rel;
          d["sq_rel"] = r.sq_rel;
          d["rmse"] = r.rmse;
          d["rmse_log"] = r.rmse_log;
          d["pixels"] = r.pixels;
          d["scale"] = r.scale;
          return d;
        },
        py::arg("pred"), py::arg("gt"), py::arg("cap") = 80.0, py::arg("median_scale") = false);

  m.def("read_poses", [](const std::string& path) { return from_trajectory(read_poses(path)); }, py::arg("path"));
  m.def("write_poses", [](const std::vector<Eigen::MatrixXd>& poses, const std::string& path) {
        write_poses(to_trajectory(poses), path);
      },
      py::arg("poses"), py::arg("path"));
  m.def("read_image", [](const std::string& path) { return from_image(read_image(path)); }, py::arg("path"));
  m.def("write_image", [](const Array& image, const std::string& path, int maxval) {
        write_image(to_image(image), path, maxval);
      },
      py::arg("image"), py::arg("path"), py::arg("maxval") = 255);
  m.def("read_depth", [](const std::string& path) { return from_map(read_depth(path)); }, py::arg("path"));
  m.def("write_depth", [](const Array& depth, const std::string& path) { write_depth(to_map(depth), path); },
        py::arg("depth"), py::arg("path"));
}
