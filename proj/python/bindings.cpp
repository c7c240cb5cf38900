#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wordfuse/align.hpp"
#include "wordfuse/checkpoint.hpp"
#include "wordfuse/cli.hpp"
#include "wordfuse/dsp.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/feature_cache.hpp"
#include "wordfuse/metrics.hpp"

namespace py = pybind11;
using namespace wordfuse;

namespace {

FrameMatrix to_frames(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() == 1) {
    FrameMatrix f;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) f.push_back({a.at(i)});
    return f;
  }
  if (a.ndim() != 2) throw py::value_error("expected a 1-D or 2-D array of frames");
  FrameMatrix f(static_cast<std::size_t>(a.shape(0)), std::vector<double>(static_cast<std::size_t>(a.shape(1))));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    for (py::ssize_t j = 0; j < a.shape(1); ++j) f[i][j] = r(i, j);
  return f;
}

py::array_t<double> to_array(const FrameMatrix& f) {
  const std::size_t cols = f.empty() ? 0 : f.front().size();
  py::array_t<double> out({f.size(), cols});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) w(i, j) = f[i][j];
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["wa"] = m.wa;
  d["ua"] = m.ua;
  d["weighted_f1"] = m.weighted_f1;
  d["total"] = m.total;
  d["confusion"] = m.confusion;
  return d;
}

py::dict attention_dict(const AttentionSet& a) {
  py::dict d;
  d["t_alpha"] = a.t_alpha;
  d["w_alpha"] = a.w_alpha;
  if (a.s_alpha) d["s_alpha"] = *a.s_alpha;
  if (a.u_alpha) d["u_alpha"] = *a.u_alpha;
  d["f_alpha"] = a.f_alpha;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Word-level multimodal attention fusion";

  py::register_exception<Error>(m, "WordfuseError", PyExc_RuntimeError);

  m.def(
      "dtw",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double radius,
         const std::string& distance) {
        const DtwResult r = dtw_band(to_frames(a), to_frames(b), radius, parse_distance(distance));
        return py::make_tuple(r.cost, r.path);
      },
      py::arg("a"), py::arg("b"), py::arg("radius") = kUnboundedRadius, py::arg("distance") = "euclidean",
      "Banded DTW; returns (cost, path).");

  m.def(
      "mfsc",
      [](const std::vector<double>& samples, int sample_rate, std::size_t n_filters) {
        MfscConfig c;
        c.n_filters = n_filters;
        const AudioBuffer audio{samples, sample_rate};
        return to_array(extract_mfsc(audio, build_filterbank(sample_rate, c), c));
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("n_filters") = 64,
      "Log mel filterbank energies, frames × filters.");

  m.def(
      "metrics",
      [](const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted, std::size_t classes) {
        return metrics_dict(compute_metrics(truth, predicted, classes));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("classes"));
  m.def(
      "metrics_from_confusion", [](const Confusion& c) { return metrics_dict(Metrics::from_confusion(c)); },
      py::arg("confusion"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command-line invocation in-process; returns (exit code, stdout, stderr).");

  py::class_<Model, std::unique_ptr<Model>>(m, "Model")
      .def_static(
          "load", [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"))
      .def_property_readonly("config", [](const Model& model) { return model.config().to_json().dump(); })
      .def_property_readonly("metadata", [](const Model& model) { return model.metadata.dump(); })
      .def_property_readonly("vocabulary", [](const Model& model) { return model.vocabulary().tokens(); })
      .def(
          "predict",
          [](Model& model, const std::string& cache_path, const std::vector<std::string>& ids) {
            const FeatureCache cache = FeatureCache::load(cache_path);
            std::optional<std::size_t> padded;
            if (model.metadata.contains("padded_length")) padded = model.metadata["padded_length"].get<std::size_t>();
            py::list out;
            for (const ModelInput& in : make_inputs(cache, ids, model.vocabulary(), padded)) {
              const Prediction p = model.predict(in);
              py::dict d;
              d["id"] = in.id;
              d["label"] = p.label;
              d["scores"] = p.scores;
              d["attention"] = attention_dict(p.attention);
              out.append(d);
            }
            return out;
          },
          py::arg("cache"), py::arg("ids"), "Predictions for cached utterances, with every attention level.");
}
