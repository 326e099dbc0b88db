#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pixle/cli.hpp"
#include "pixle/harness.hpp"
#include "pixle/png_io.hpp"
#include "pixle/search.hpp"

namespace py = pybind11;
using namespace pixle;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

ImageTensor image_from_array(const FloatArray& a) {
  if (a.ndim() == 2) {
    return ImageTensor(1, a.shape(0), a.shape(1), std::vector<float>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 3) throw ContractViolation("expected an array of shape (c, h, w) or (h, w)");
  return ImageTensor(a.shape(0), a.shape(1), a.shape(2), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray image_to_array(const ImageTensor& img) {
  FloatArray out({img.channels(), img.height(), img.width()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<PixelCoord> coords_from(const std::vector<std::pair<std::size_t, std::size_t>>& v) {
  std::vector<PixelCoord> out;
  for (auto [r, c] : v) out.push_back({r, c});
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> coords_to(const std::vector<PixelCoord>& v) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto p : v) out.emplace_back(p.row, p.col);
  return out;
}

/// Oracle backed by a Python callable mapping a (c, h, w) float32 array to probabilities.
class CallableOracle final : public Oracle {
 public:
  CallableOracle(py::function fn, std::size_t num_classes)
      : fn_(std::move(fn)), descriptor_{OracleKind::Builtin, "python", num_classes, false, std::nullopt} {
    if (num_classes < 2) throw InvalidModel("an oracle needs at least 2 classes");
  }
  ~CallableOracle() override {
    py::gil_scoped_acquire gil;
    fn_ = py::function();
  }
  ProbVector query(const ImageTensor& image) override {
    py::gil_scoped_acquire gil;
    auto probs = fn_(image_to_array(image)).cast<ProbVector>();
    validate_probs(probs, descriptor_.num_classes, 1e-3);
    return probs;
  }
  const OracleDescriptor& descriptor() const noexcept override { return descriptor_; }

 private:
  py::function fn_;
  OracleDescriptor descriptor_;
};

}  // namespace

PYBIND11_MODULE(_pixle, m) {
  m.doc() = "Pixel-rearrangement black-box attacks";

  // Registered after the base so the more specific translators are tried first.
  auto& base = py::register_exception<Error>(m, "PixleError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());

  py::enum_<TransferMode>(m, "TransferMode")
      .value("OVERWRITE", TransferMode::Overwrite)
      .value("SWAP", TransferMode::Swap);
  py::enum_<MappingKind>(m, "MappingKind")
      .value("RANDOM", MappingKind::Random)
      .value("SIMILARITY", MappingKind::Similarity)
      .value("DISTANCE", MappingKind::Distance)
      .value("SIMILARITY_DIST", MappingKind::SimilarityDist)
      .value("DISTANCE_DIST", MappingKind::DistanceDist);
  py::enum_<SearchAlgorithm>(m, "SearchAlgorithm")
      .value("RESTART_ITERATIVE", SearchAlgorithm::RestartIterative)
      .value("ITERATIVE", SearchAlgorithm::Iterative);

  py::class_<ImageTensor>(m, "ImageTensor")
      .def(py::init(&image_from_array), py::arg("array"))
      .def_property_readonly("shape", [](const ImageTensor& t) {
        return py::make_tuple(t.channels(), t.height(), t.width());
      })
      .def("numpy", &image_to_array)
      .def("__eq__", [](const ImageTensor& a, const ImageTensor& b) { return a == b; })
      .def("__repr__", [](const ImageTensor& t) {
        return "ImageTensor(" + std::to_string(t.channels()) + "x" + std::to_string(t.height()) + "x" +
               std::to_string(t.width()) + ")";
      });

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &AttackConfig::algorithm)
      .def_readwrite("restarts", &AttackConfig::restarts)
      .def_readwrite("iterations", &AttackConfig::iterations)
      .def_readwrite("patch_min", &AttackConfig::patch_min)
      .def_readwrite("patch_max", &AttackConfig::patch_max)
      .def_readwrite("mapping", &AttackConfig::mapping)
      .def_readwrite("transfer", &AttackConfig::transfer)
      .def_readwrite("seed", &AttackConfig::seed)
      .def_readwrite("early_stop", &AttackConfig::early_stop)
      .def("query_budget", &AttackConfig::query_budget)
      .def("validate", &AttackConfig::validate)
      .def("to_dict", [](const AttackConfig& c) { return json_to_py(to_json(c)); });

  py::class_<AttackOutcome>(m, "AttackOutcome")
      .def_readonly("success", &AttackOutcome::success)
      .def_readonly("adversarial", &AttackOutcome::adversarial)
      .def_readonly("queries", &AttackOutcome::queries)
      .def_readonly("l0", &AttackOutcome::l0)
      .def_readonly("final_loss", &AttackOutcome::final_loss)
      .def_readonly("applied_moves", &AttackOutcome::applied_moves)
      .def_property_readonly("trajectory", [](const AttackOutcome& o) {
        std::vector<double> losses;
        for (const auto& p : o.trajectory) losses.push_back(p.loss);
        return losses;
      });

  py::class_<Oracle>(m, "Oracle")
      .def("query", [](Oracle& o, const ImageTensor& img) { return o.query(img); })
      .def_property_readonly("num_classes", &Oracle::num_classes)
      .def_property_readonly("concurrent_safe", &Oracle::concurrent_safe);
  py::class_<PixelProbeOracle, Oracle>(m, "PixelProbeOracle").def(py::init<>());
  py::class_<LinearOracle, Oracle>(m, "LinearOracle").def(py::init<LinearModel>());
  py::class_<CallableOracle, Oracle>(m, "CallableOracle")
      .def(py::init<py::function, std::size_t>(), py::arg("fn"), py::arg("num_classes"));

  py::class_<LinearModel>(m, "LinearModel")
      .def(py::init([](const FloatArray& weights, const FloatArray& bias, std::tuple<std::size_t, std::size_t, std::size_t> shape) {
             LinearModel lm;
             lm.num_classes = static_cast<std::size_t>(bias.size());
             lm.shape = {std::get<0>(shape), std::get<1>(shape), std::get<2>(shape)};
             lm.weights.assign(weights.data(), weights.data() + weights.size());
             lm.bias.assign(bias.data(), bias.data() + bias.size());
             lm.validate();
             return lm;
           }),
           py::arg("weights"), py::arg("bias"), py::arg("shape"))
      .def_static("load", &LinearModel::load)
      .def("save", &LinearModel::save)
      .def_readonly("num_classes", &LinearModel::num_classes);

  m.def("make_oracle", &make_oracle, py::arg("spec"), "Oracle from builtin:NAME, linear:PATH, process:CMD or tcp:ADDR");

  m.def("run_attack",
        [](const ImageTensor& image, std::size_t label, Oracle& oracle, const AttackConfig& config,
           std::optional<std::size_t> target) {
          const AttackGoal goal{label, target};
          py::gil_scoped_release release;
          return run_attack(image, goal, oracle, config);
        },
        py::arg("image"), py::arg("label"), py::arg("oracle"), py::arg("config") = AttackConfig{},
        py::arg("target") = py::none());

  m.def("build_patch_indices",
        [](std::size_t x, std::size_t y, std::size_t w, std::size_t h, std::size_t height, std::size_t width) {
          return coords_to(build_patch_indices(Patch{x, y, w, h}, height, width));
        },
        py::arg("origin_x"), py::arg("origin_y"), py::arg("width"), py::arg("height"), py::arg("image_height"),
        py::arg("image_width"));
  m.def("apply_mapping",
        [](const ImageTensor& image, const std::vector<std::pair<std::size_t, std::size_t>>& sources,
           const std::vector<std::pair<std::size_t, std::size_t>>& destinations, TransferMode mode) {
          const auto s = coords_from(sources), d = coords_from(destinations);
          return apply_mapping(image, s, d, mode);
        });
  m.def("l0_pixel_distance", &l0_pixel_distance);
  m.def("map_pixel",
        [](MappingKind kind, std::pair<std::size_t, std::size_t> source, const ImageTensor& image, std::uint64_t seed) {
          Rng rng(seed);
          const auto p = map_pixel(kind, {source.first, source.second}, image, rng);
          return std::make_pair(p.row, p.col);
        },
        py::arg("kind"), py::arg("source"), py::arg("image"), py::arg("seed") = 0);
  m.def("aggregate_metrics", [](const std::vector<double>& v) {
    const Stat s = aggregate_metrics(v);
    return std::make_pair(s.mean, s.std);
  });

  m.def("load_png", &load_png);
  m.def("save_png", &save_png, py::arg("path"), py::arg("image"));

  py::class_<LabeledDataset>(m, "Dataset")
      .def_readonly("class_count", &LabeledDataset::class_count)
      .def("__len__", [](const LabeledDataset& d) { return d.items.size(); })
      .def_property_readonly("ids", [](const LabeledDataset& d) {
        std::vector<std::string> ids;
        for (const auto& item : d.items) ids.push_back(item.id);
        return ids;
      });
  m.def("load_manifest", &load_manifest, py::arg("path"), py::arg("class_count") = py::none());
  m.def("select_correctly_classified",
        [](const LabeledDataset& d, Oracle& oracle, std::size_t quota) {
          py::gil_scoped_release release;
          return select_correctly_classified(d, oracle, quota).dataset;
        });
  m.def("run_campaign",
        [](const LabeledDataset& d, Oracle& oracle, const AttackConfig& config, std::size_t workers,
           std::optional<std::filesystem::path> out_dir) {
          CampaignReport report;
          {
            py::gil_scoped_release release;
            report = run_campaign(d, oracle, config, {workers, out_dir, nullptr});
          }
          return json_to_py(to_json(report));
        },
        py::arg("dataset"), py::arg("oracle"), py::arg("config") = AttackConfig{}, py::arg("workers") = 1,
        py::arg("out_dir") = py::none());
  m.def("run_targeted_matrix",
        [](const LabeledDataset& d, Oracle& oracle, const AttackConfig& config, std::size_t quota,
           std::optional<std::filesystem::path> out_dir) {
          TargetedMatrix matrix;
          {
            py::gil_scoped_release release;
            matrix = run_targeted_matrix(d, oracle, config, quota, {1, out_dir, nullptr});
          }
          return json_to_py(to_json(matrix));
        },
        py::arg("dataset"), py::arg("oracle"), py::arg("config") = AttackConfig{}, py::arg("quota") = 20,
        py::arg("out_dir") = py::none());

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
