#include "fvtactile/harness.hpp"
#include "fvtactile/learn.hpp"
#include "fvtactile/percept.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fvt;

namespace {

using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayImage image_from(const ByteArray& a) {
  if (a.ndim() != 2) throw Error("invalid_argument", "expected a 2-D uint8 array");
  GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

ByteArray array_from(const GrayImage& img) {
  ByteArray a({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
  return a;
}

std::vector<std::string> dump_all(const std::vector<Json>& log) {
  std::vector<std::string> out;
  out.reserve(log.size());
  for (const auto& r : log) out.push_back(r.dump());
  return out;
}

std::vector<Json> parse_all(const std::vector<std::string>& lines) {
  std::vector<Json> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(Json::parse(l));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulated vision-based tactile sensing and skills";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // args == (code, message)
      PyErr_SetObject(error.ptr(), py::make_tuple(e.code(), e.what()).ptr());
    }
  });

  m.attr("schema_version") = kSchemaVersion;

  m.def("scenario_names", [] {
    std::vector<std::string> names;
    for (const auto& s : scenario_registry()) names.push_back(s.name);
    return names;
  });
  m.def("skill_names", [] { return runnable_skill_names(); });

  m.def(
      "run_scenario",
      [](const std::string& scenario, const std::string& skill, std::uint64_t seed, std::optional<int> frames,
         const std::map<std::string, double>& skill_params, const std::map<std::string, double>& scenario_params,
         const std::string& out_dir) {
        RunConfig cfg;
        cfg.scenario = scenario;
        cfg.skill = skill;
        cfg.seed = seed;
        cfg.frames = frames;
        cfg.skill_params = skill_params;
        cfg.scenario_params = scenario_params;
        cfg.out_dir = out_dir;
        if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(cfg);
        }
        Json summary = r.summary();
        summary["scenario"] = scenario;
        summary["seed"] = seed;
        return py::make_tuple(summary.dump(), dump_all(r.log));
      },
      py::arg("scenario"), py::arg("skill") = "", py::arg("seed") = 0, py::arg("frames") = py::none(),
      py::arg("skill_params") = std::map<std::string, double>{},
      py::arg("scenario_params") = std::map<std::string, double>{}, py::arg("out_dir") = "");

  m.def(
      "run_assembly",
      [](std::uint64_t seed, const std::string& variant, const std::string& out_dir) {
        AssemblyConfig cfg;
        cfg.seed = seed;
        cfg.variant = variant;
        cfg.out_dir = out_dir;
        if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
        AssemblyReport r;
        {
          py::gil_scoped_release release;
          r = run_assembly(cfg);
        }
        return py::make_tuple(r.to_json().dump(), dump_all(r.log));
      },
      py::arg("seed") = 0, py::arg("variant") = "default", py::arg("out_dir") = "");

  m.def(
      "replay_assembly",
      [](const std::vector<std::string>& log, const std::string& report) {
        return replay_assembly(parse_all(log), Json::parse(report));
      },
      py::arg("log"), py::arg("report"));

  m.def(
      "plot_view",
      [](const std::vector<std::string>& log, const std::string& view) {
        const PlotTable t = plot_view(parse_all(log), view);
        return py::make_tuple(t.header, t.rows);
      },
      py::arg("log"), py::arg("view"));

  m.def(
      "object_moments",
      [](const ByteArray& mask) {
        const ObjectPercept p = object_moments(image_from(mask));
        py::dict d;
        d["present"] = p.present;
        d["x"] = p.x;
        d["y"] = p.y;
        d["area"] = p.area;
        d["theta"] = p.theta;
        d["degenerate_orientation"] = p.degenerate_orientation;
        return d;
      },
      py::arg("mask"));

  m.def(
      "slip_estimate",
      [](const ByteArray& prev, const ByteArray& cur, const ByteArray& mask) {
        const SlipSignal s = slip_estimate(image_from(prev), image_from(cur), image_from(mask));
        py::dict d;
        d["flow"] = s.flow_magnitude;
        d["active"] = s.active;
        d["blocks"] = s.blocks;
        return d;
      },
      py::arg("prev"), py::arg("cur"), py::arg("mask"));

  m.def(
      "render_rest_frame",
      [](double cx, double cy, double half_w, double half_h, double angle) {
        const SensorGeometry g = SensorGeometry::make_default();
        const SceneObject o = SceneObject::rectangle(cx, cy, half_w, half_h, angle);
        SkinModel skin;
        skin.noise_sigma = 0.0;
        Rng rng(0);
        const SensorFrame f = render_frame(g, deform_markers(g, skin, {}, rng), o);
        return py::make_tuple(array_from(f.image), array_from(f.silhouette));
      },
      py::arg("cx"), py::arg("cy"), py::arg("half_w"), py::arg("half_h"), py::arg("angle") = 0.0);

  py::class_<KrrModel>(m, "KrrModel")
      .def_static(
          "fit",
          [](const MatX& X, const VecX& y, double lambda, double gamma, bool standardize) {
            return krr_fit(X, y, lambda, gamma, standardize);
          },
          py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("gamma"), py::arg("standardize") = true)
      .def("predict", [](const KrrModel& k, const MatX& X) { return krr_predict_rows(k, X); }, py::arg("X"))
      .def("residual", [](const KrrModel& k, const VecX& y) { return krr_residual(k, y); }, py::arg("y"))
      .def_readonly("weights", &KrrModel::weights)
      .def_readonly("support", &KrrModel::support)
      .def_readonly("gamma", &KrrModel::gamma)
      .def_readonly("lam", &KrrModel::lambda)
      .def("to_json", [](const KrrModel& k) { return to_json(k).dump(); });

  m.def(
      "press_dataset",
      [](std::uint64_t seed) {
        Rng rng(seed);
        const PressDataset ds = gen_press_dataset(rng);
        py::dict d;
        d["X"] = ds.X;
        d["y"] = ds.y;
        d["episode"] = ds.episode;
        d["frame"] = ds.frame;
        d["is_test"] = ds.is_test;
        return d;
      },
      py::arg("seed") = 0);

  m.def(
      "stir_dataset",
      [](std::uint64_t seed) {
        Rng rng(seed);
        const StirDataset ds = gen_stir_dataset(rng);
        MatX X(static_cast<Eigen::Index>(ds.trials.size()), ds.trials.empty() ? 0 : ds.trials[0].summary.size());
        std::vector<int> label, movement;
        std::vector<bool> is_test;
        for (std::size_t i = 0; i < ds.trials.size(); ++i) {
          X.row(static_cast<Eigen::Index>(i)) = ds.trials[i].summary.transpose();
          label.push_back(static_cast<int>(ds.trials[i].substance));
          movement.push_back(ds.trials[i].movement_id);
          is_test.push_back(ds.trials[i].is_test);
        }
        py::dict d;
        d["X"] = X;
        d["label"] = label;
        d["movement"] = movement;
        d["is_test"] = is_test;
        d["classes"] = substance_names();
        return d;
      },
      py::arg("seed") = 0);

  m.def(
      "train_stir_classifier",
      [](const MatX& X, const std::vector<int>& labels, std::uint64_t seed, int epochs) {
        Rng rng(seed);
        MlpTrainConfig cfg;
        cfg.epochs = epochs;
        MlpTrainResult r;
        {
          py::gil_scoped_release release;
          r = mlp_train(X, labels, 3, rng, cfg);
        }
        return py::make_tuple(to_json(r.model, substance_names()).dump(), r.loss_history,
                              r.gradient_check_error);
      },
      py::arg("X"), py::arg("labels"), py::arg("seed") = 0, py::arg("epochs") = 3000);

  m.def(
      "eval_stir_classifier",
      [](const std::string& model, const MatX& X, const std::vector<int>& labels) {
        return to_json(mlp_eval(mlp_from_json(Json::parse(model)), X, labels, substance_names())).dump();
      },
      py::arg("model"), py::arg("X"), py::arg("labels"));
}
