#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ambipose/cli.hpp"
#include "ambipose/errors.hpp"
#include "ambipose/eval.hpp"
#include "ambipose/geometry.hpp"
#include "ambipose/model.hpp"
#include "ambipose/scenes.hpp"
#include "ambipose/trainer.hpp"

namespace py = pybind11;
using namespace ambipose;

namespace {

using Array = py::array_t<double, py::array::c_style>;

// Poses as a pair of arrays: translations (n, 3) and rotations (n, 3, 3).
py::tuple poses_to_arrays(const std::vector<Pose>& poses) {
  const auto n = static_cast<py::ssize_t>(poses.size());
  Array t({n, py::ssize_t{3}});
  Array R({n, py::ssize_t{3}, py::ssize_t{3}});
  auto tv = t.mutable_unchecked<2>();
  auto Rv = R.mutable_unchecked<3>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& p = poses[static_cast<std::size_t>(i)];
    for (int a = 0; a < 3; ++a) {
      tv(i, a) = p.t(a);
      for (int b = 0; b < 3; ++b) Rv(i, a, b) = p.R.matrix()(a, b);
    }
  }
  return py::make_tuple(t, R);
}

Array observations(const std::vector<LabeledSample>& samples) {
  const auto n = static_cast<py::ssize_t>(samples.size());
  const py::ssize_t d = samples.empty() ? 0 : samples.front().obs.size();
  Array out({n, d});
  auto v = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    for (py::ssize_t j = 0; j < d; ++j) v(i, j) = samples[static_cast<std::size_t>(i)].obs(j);
  }
  return out;
}

std::vector<Pose> labels(const std::vector<LabeledSample>& samples) {
  std::vector<Pose> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.pose);
  return out;
}

py::object json_to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

const std::vector<LabeledSample>& split(const Dataset& ds, const std::string& name,
                                        std::vector<LabeledSample>& storage) {
  if (name == "train") {
    storage = ds.train_samples();
  } else if (name == "test") {
    storage = ds.test_samples();
  } else {
    throw ValidationError("split must be 'train' or 'test', got '" + name + "'");
  }
  return storage;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal pose regression core";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def(
      "rotation_from_6d", [](const Vec6& r) { return rotation_from_6d(r).matrix(); }, py::arg("r6"),
      "Gram-Schmidt recovery of a rotation matrix from a 6-vector.");
  m.def(
      "geodesic_angle", [](const Mat3& a, const Mat3& b) { return geodesic_angle(Rotation(a), Rotation(b)); },
      py::arg("R_a"), py::arg("R_b"), "Rotation angle of R_a^T R_b in radians.");
  m.def(
      "chordal_distance", [](const Mat3& a, const Mat3& b) { return chordal_distance(Rotation(a), Rotation(b)); },
      py::arg("R_a"), py::arg("R_b"));

  py::class_<SceneSpec>(m, "SceneSpec")
      .def_readonly("name", &SceneSpec::name)
      .def_readonly("symmetry_order", &SceneSpec::symmetry_order)
      .def_readonly("ring_radius", &SceneSpec::ring_radius)
      .def_property_readonly("scale", &SceneSpec::scale)
      .def_property_readonly("obs_dim", &SceneSpec::obs_dim)
      .def("to_dict", [](const SceneSpec& s) { return json_to_python(nlohmann::json(s)); });
  m.def("builtin_scene", &builtin_scene, py::arg("name"));
  m.def("builtin_scene_names", &builtin_scene_names);
  m.def(
      "oracle_modes",
      [](const SceneSpec& spec, const Vec3& t, const Mat3& R) {
        return poses_to_arrays(oracle_modes(spec, Pose{t, Rotation(R)}));
      },
      py::arg("scene"), py::arg("t"), py::arg("R"), "All symmetric poses of (t, R); row 0 is the input.");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("scene", [](const Dataset& d) { return d.manifest.spec; })
      .def_property_readonly("n_train", [](const Dataset& d) { return d.manifest.n_train; })
      .def_property_readonly("n_test", [](const Dataset& d) { return d.manifest.n_test; })
      .def_property_readonly("seed", [](const Dataset& d) { return d.manifest.seed; })
      .def(
          "observations",
          [](const Dataset& d, const std::string& s) {
            std::vector<LabeledSample> buf;
            return observations(split(d, s, buf));
          },
          py::arg("split") = "train", "Observation matrix of shape (n, obs_dim).")
      .def(
          "poses",
          [](const Dataset& d, const std::string& s) {
            std::vector<LabeledSample> buf;
            return poses_to_arrays(labels(split(d, s, buf)));
          },
          py::arg("split") = "train", "Label translations (n, 3) and rotations (n, 3, 3).")
      .def("write", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(dir, d); },
           py::arg("directory"));
  m.def(
      "generate_dataset",
      [](const std::string& scene, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
        return generate_dataset(builtin_scene(scene), n_train, n_test, seed);
      },
      py::arg("scene"), py::arg("n_train"), py::arg("n_test"), py::arg("seed"));
  m.def("read_dataset", &read_dataset, py::arg("directory"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("mc_samples", &TrainConfig::mc_samples)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("n_lr_decay", &TrainConfig::n_lr_decay)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "mode", [](const TrainConfig& c) { return std::string(to_string(c.mode)); },
          [](TrainConfig& c, const std::string& s) { c.mode = train_mode_from_string(s); })
      .def_property(
          "latent_dim", [](const TrainConfig& c) { return c.arch.latent_dim; },
          [](TrainConfig& c, int d) { c.arch.latent_dim = d; })
      .def("to_dict", [](const TrainConfig& c) { return json_to_python(nlohmann::json(c)); });

  py::class_<PoseRegressor>(m, "PoseRegressor")
      .def_property_readonly("obs_dim", [](const PoseRegressor& r) { return r.obs_dim(); })
      .def_readonly("latent_dim", &PoseRegressor::latent_dim)
      .def_readonly("scene_id", &PoseRegressor::scene_id)
      .def(
          "predict",
          [](const PoseRegressor& r, const Vec& obs, std::size_t M, std::uint64_t seed) {
            if (obs.size() != r.obs_dim()) {
              throw ValidationError("observation has " + std::to_string(obs.size()) + " entries, model expects " +
                                    std::to_string(r.obs_dim()));
            }
            PoseSampleSet set;
            {
              py::gil_scoped_release release;
              set = predict_posterior(r, obs, M, seed);
            }
            return poses_to_arrays(set.poses);
          },
          py::arg("obs"), py::arg("M") = 1000, py::arg("seed") = 0,
          "Draw M pose samples; returns translations (M, 3) and rotations (M, 3, 3).")
      .def("save", [](const PoseRegressor& r, const std::filesystem::path& p) { save_regressor(p, r); },
           py::arg("path"));
  m.def("load_regressor", py::overload_cast<const std::filesystem::path&>(&load_regressor), py::arg("path"));

  m.def(
      "train",
      [](const Dataset& ds, const TrainConfig& cfg) {
        TrainResult res;
        {
          py::gil_scoped_release release;
          res = train(ds, cfg);
        }
        std::vector<double> loss;
        for (const auto& e : res.report.epochs) loss.push_back(e.loss);
        return py::make_tuple(std::move(res.model), loss);
      },
      py::arg("dataset"), py::arg("config"), "Train on the train split; returns (model, per-epoch loss).");

  m.def(
      "evaluate",
      [](const PoseRegressor& r, const Dataset& ds, std::size_t M, std::uint64_t seed, bool relative) {
        EvalOptions o;
        o.mc_samples = M;
        o.seed = seed;
        o.thresholds = default_thresholds(0.1, relative ? ds.manifest.spec.scale() : 1.0);
        const auto queries = ds.test_samples();
        EvalReport rep;
        {
          py::gil_scoped_release release;
          rep = evaluate(r, ds.manifest.spec, queries, o);
        }
        return json_to_python(to_json(rep));
      },
      py::arg("model"), py::arg("dataset"), py::arg("M") = 1000, py::arg("seed") = 0,
      py::arg("relative_thresholds") = true, "Test-split recall, median errors and mode coverage as a dict.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"ambipose"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a command-line invocation; returns (exit_code, stdout, stderr).");
}
