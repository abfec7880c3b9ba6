#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "rmood/app.hpp"
#include "rmood/rmood.hpp"

namespace py = pybind11;
using namespace rmood;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

// (N, T) array -> EpisodeMatrix.
EpisodeMatrix to_episode(const Array& a, std::optional<std::size_t> onset) {
  if (a.ndim() != 2) throw ShapeError("episodes are 2-D arrays of shape (N, T)");
  return EpisodeMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                       std::vector<double>(a.data(), a.data() + a.size()), onset);
}

std::vector<EpisodeMatrix> to_episodes(const std::vector<Array>& arrays,
                                       const std::optional<std::vector<std::optional<std::size_t>>>& onsets) {
  if (onsets && onsets->size() != arrays.size()) {
    throw ShapeError("onsets must have one entry per episode");
  }
  std::vector<EpisodeMatrix> out;
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    out.push_back(to_episode(arrays[i], onsets ? (*onsets)[i] : std::nullopt));
  }
  return out;
}

// Copies into a fresh 1-D array.
py::array_t<double> to_numpy(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const EpisodeMatrix& e) {
  py::array_t<double> out({e.n_dims(), e.n_steps()});
  std::copy(e.data().begin(), e.data().end(), out.mutable_data());
  return out;
}

DetectorConfig make_config(std::size_t window, double s, double sigma, const std::string& variant,
                           std::size_t n_trees, std::size_t subsample,
                           std::optional<std::size_t> max_depth, std::uint64_t seed) {
  DetectorConfig c;
  c.window = window;
  c.kernel = {s, sigma};
  c.variant = parse_variant(variant);
  c.forest.n_trees = n_trees;
  c.forest.subsample = subsample;
  c.forest.max_depth = max_depth;
  c.forest.seed = seed;
  c.validate();
  return c;
}

py::dict split_dict(const std::vector<EpisodeMatrix>& episodes) {
  py::list arrays, onsets;
  for (const auto& e : episodes) {
    arrays.append(to_array(e));
    onsets.append(e.onset() ? py::cast(*e.onset()) : py::none());
  }
  py::dict d;
  d["episodes"] = arrays;
  d["onsets"] = onsets;
  return d;
}

#define RMOOD_CONFIG_ARGS                                                                 \
  py::arg("window") = 10, py::arg("s") = 1.5, py::arg("sigma") = 1.0,                    \
      py::arg("variant") = "full", py::arg("n_trees") = 100, py::arg("subsample") = 256, \
      py::arg("max_depth") = py::none(), py::arg("seed") = 0

}  // namespace

PYBIND11_MODULE(_rmood, m) {
  m.doc() = "Isolation-forest OOD detection for multivariate episodes";

  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", data.ptr());
  py::register_exception<ContaminationError>(m, "ContaminationError", data.ptr());
  auto load = py::register_exception<LoadError>(m, "LoadError", base.ptr());
  py::register_exception<VersionError>(m, "VersionError", load.ptr());
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  // Features.
  m.def("rbf_distance", [](const Array& w) { return rbf_distance(to_vector(w)); }, py::arg("window"));
  m.def(
      "rbf_similarity",
      [](double d, double s, double sigma) { return rbf_similarity(d, KernelParams{s, sigma}); },
      py::arg("d"), py::arg("s") = 1.5, py::arg("sigma") = 1.0);
  m.def("window_mean", [](const Array& w) { return window_mean(to_vector(w)); }, py::arg("window"));
  m.def(
      "extract_features",
      [](const Array& w, double s, double sigma, const std::string& variant) {
        const auto f = extract_features(to_vector(w), KernelParams{s, sigma}, parse_variant(variant));
        auto span = f.span();
        return std::vector<double>(span.begin(), span.end());
      },
      py::arg("window"), py::arg("s") = 1.5, py::arg("sigma") = 1.0, py::arg("variant") = "full");
  m.def("c_factor", &c_factor, py::arg("n"));

  // Detector.
  py::class_<DetectorModel>(m, "Model")
      .def_property_readonly("n_dims", &DetectorModel::n_dims)
      .def_property_readonly("window", [](const DetectorModel& d) { return d.config.window; })
      .def_property_readonly("sigma", [](const DetectorModel& d) { return d.config.kernel.sigma; })
      .def_property_readonly("variant",
                             [](const DetectorModel& d) { return std::string(to_string(d.config.variant)); })
      .def_property_readonly("cusum",
                             [](const DetectorModel& d) -> py::object {
                               if (!d.cusum) return py::none();
                               py::dict c;
                               c["target"] = d.cusum->target;
                               c["slack"] = d.cusum->slack;
                               c["threshold"] = d.cusum->threshold;
                               return c;
                             })
      .def(
          "score_episode",
          [](const DetectorModel& d, const Array& episode) {
            const auto s = score_episode(d, to_episode(episode, std::nullopt));
            return py::make_tuple(s.first_scored, to_numpy(s.scores));
          },
          py::arg("episode"), "Returns (first_scored_timestep, scores) for an (N, T) array.")
      .def(
          "score_step",
          [](const DetectorModel& d, const Array& window) {
            if (window.ndim() != 2) throw ShapeError("window must be an (N, w) array");
            Window w(static_cast<std::size_t>(window.shape(0)), static_cast<std::size_t>(window.shape(1)),
                     std::vector<double>(window.data(), window.data() + window.size()),
                     static_cast<std::size_t>(window.shape(1)) - 1);
            return score_step(d, w);
          },
          py::arg("window"))
      .def("save", [](const DetectorModel& d) { return save_model(d); })
      .def_static("load", [](const std::string& bytes) { return load_model(bytes); }, py::arg("payload"))
      .def("__repr__", [](const DetectorModel& d) {
        return "<rmood.Model n_dims=" + std::to_string(d.n_dims()) +
               " variant=" + std::string(to_string(d.config.variant)) + ">";
      });

  m.def(
      "train",
      [](const std::vector<Array>& episodes, std::size_t window, double s, double sigma,
         const std::string& variant, std::size_t n_trees, std::size_t subsample,
         std::optional<std::size_t> max_depth, std::uint64_t seed) {
        const auto config = make_config(window, s, sigma, variant, n_trees, subsample, max_depth, seed);
        return train(to_episodes(episodes, std::nullopt), config);
      },
      py::arg("episodes"), RMOOD_CONFIG_ARGS,
      "Fits one isolation forest per dimension on clean (N, T) episodes.");

  m.def(
      "tune_sigma",
      [](const std::vector<Array>& train_eps, const std::vector<Array>& validation,
         const std::vector<std::optional<std::size_t>>& onsets,
         std::optional<std::vector<double>> grid, std::size_t window, double s, double sigma,
         const std::string& variant, std::size_t n_trees, std::size_t subsample,
         std::optional<std::size_t> max_depth, std::uint64_t seed) {
        const auto config = make_config(window, s, sigma, variant, n_trees, subsample, max_depth, seed);
        const auto tr = to_episodes(train_eps, std::nullopt);
        const auto va = to_episodes(validation, onsets);
        const auto g = grid ? *grid : default_sigma_grid(tr);
        const auto result = tune_sigma(tr, va, g, config);
        return py::make_tuple(result.sigma, result.table);
      },
      py::arg("train"), py::arg("validation"), py::arg("onsets"), py::arg("grid") = py::none(),
      RMOOD_CONFIG_ARGS, "Returns (best_sigma, [(sigma, auroc), ...]).");

  // Evaluation.
  m.def(
      "auroc",
      [](const Array& scores, const std::vector<std::uint8_t>& labels) {
        return auroc(to_vector(scores), labels);
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "calibrate_threshold",
      [](const Array& scores, double fpr) { return calibrate_threshold(to_vector(scores), fpr); },
      py::arg("scores"), py::arg("fpr"));
  m.def(
      "cusum",
      [](const Array& scores, std::size_t first_timestep, double target, double slack,
         double threshold) {
        const auto trace = cusum_run(to_vector(scores), first_timestep, {target, slack, threshold});
        return py::make_tuple(to_numpy(trace.statistic),
                              trace.final_state.alarm_time);
      },
      py::arg("scores"), py::arg("first_timestep"), py::arg("target"), py::arg("slack"),
      py::arg("threshold"), "Returns (statistic, alarm_time or None).");

  // Environments.
  m.def(
      "generate_scenario",
      [](const std::string& scenario_id, std::uint64_t seed, std::size_t train_count,
         std::size_t validation, std::size_t test, std::size_t length) {
        SuiteCounts counts;
        counts.train = train_count;
        counts.validation = validation;
        counts.test = test;
        counts.length = length;
        counts.validate();
        const auto data = generate_scenario(app::scenario_from_id(scenario_id), seed, counts);
        py::dict d;
        d["train"] = split_dict(data.train);
        d["validation"] = split_dict(data.validation);
        d["test"] = split_dict(data.test);
        return d;
      },
      py::arg("scenario"), py::arg("seed") = 0, py::arg("train") = 45, py::arg("validation") = 100,
      py::arg("test") = 100, py::arg("length") = 100,
      "Scenario ids look like cartpole-arno-strong-ar1 or linear6-action_offset-severe.");
  m.def(
      "ar_sample",
      [](const std::vector<double>& coefs, double noise_std, std::uint64_t seed, std::size_t length) {
        const auto z = ar_sample({coefs, noise_std, seed}, length);
        return to_numpy(z);
      },
      py::arg("coefs"), py::arg("noise_std"), py::arg("seed"), py::arg("length"));

  m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;
}
