#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dsbayes/annotations.hpp"
#include "dsbayes/corpus.hpp"
#include "dsbayes/error.hpp"
#include "dsbayes/inference.hpp"
#include "dsbayes/llm_client.hpp"
#include "dsbayes/metrics.hpp"
#include "dsbayes/model.hpp"
#include "dsbayes/synth.hpp"

namespace py = pybind11;
using namespace dsbayes;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array to_array(const ConfusionTensor& t) {
  Array out({t.n_annotators(), t.n_categories(), t.n_categories()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

ConfusionTensor confusion_from(const Array& a) {
  if (a.ndim() != 3 || a.shape(1) != a.shape(2)) {
    throw Error(ErrorKind::kShape, "confusion must have shape (J, K, K)");
  }
  ConfusionTensor t(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), t.values().begin());
  return t;
}

std::vector<double> vector_from(const Array& a) {
  if (a.ndim() != 1) throw Error(ErrorKind::kShape, "expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

SparseAnnotationSet make_set(std::size_t n_items, std::size_t n_annotators, std::size_t n_categories,
                             py::array_t<long long, py::array::c_style | py::array::forcecast> triples) {
  if (triples.size() != 0 && (triples.ndim() != 2 || triples.shape(1) != 3)) {
    throw Error(ErrorKind::kShape, "triples must have shape (n, 3)");
  }
  std::vector<Annotation> rows;
  const auto* p = triples.data();
  const std::size_t n = triples.size() == 0 ? 0 : static_cast<std::size_t>(triples.shape(0));
  for (std::size_t r = 0; r < n; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (p[3 * r + c] < 0) throw Error(ErrorKind::kValidation, "negative index in triples");
    }
    rows.push_back({static_cast<std::size_t>(p[3 * r]), static_cast<std::size_t>(p[3 * r + 1]),
                    static_cast<std::size_t>(p[3 * r + 2])});
  }
  return SparseAnnotationSet(n_items, n_annotators, n_categories, std::move(rows));
}

PriorSpec priors_for(const SparseAnnotationSet& data, double diag, double off) {
  return PriorSpec::defaults(data.n_categories(), diag, off);
}

py::dict metrics_dict(const BinaryMetrics& m) {
  py::dict d;
  d["balanced_accuracy"] = m.balanced_accuracy;
  d["precision"] = m.precision ? py::cast(*m.precision) : py::none();
  d["recall"] = m.recall;
  d["fpr"] = m.fpr;
  d["fnr"] = m.fnr;
  d["competence"] = m.competence;
  return d;
}

}  // namespace

PYBIND11_MODULE(dsbayes, m) {
  m.doc() = "Bayesian aggregation of categorical annotations";

  static py::exception<Error> error_type(m, "DsbayesError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<SparseAnnotationSet>(m, "AnnotationSet")
      .def(py::init(&make_set), py::arg("n_items"), py::arg("n_annotators"), py::arg("n_categories"),
           py::arg("triples"))
      .def_property_readonly("n_items", &SparseAnnotationSet::n_items)
      .def_property_readonly("n_annotators", &SparseAnnotationSet::n_annotators)
      .def_property_readonly("n_categories", &SparseAnnotationSet::n_categories)
      .def("__len__", &SparseAnnotationSet::size)
      .def("triples", [](const SparseAnnotationSet& s) {
        py::array_t<long long> out({s.size(), std::size_t{3}});
        auto* p = out.mutable_data();
        for (const auto& t : s.triples()) {
          *p++ = static_cast<long long>(t.item);
          *p++ = static_cast<long long>(t.annotator);
          *p++ = static_cast<long long>(t.label);
        }
        return out;
      });

  py::class_<ModelParams>(m, "Params")
      .def(py::init([](const Array& prevalence, const Array& confusion) {
             return to_logits({vector_from(prevalence), confusion_from(confusion)});
           }),
           py::arg("prevalence"), py::arg("confusion"))
      .def_readonly("n_annotators", &ModelParams::n_annotators)
      .def_readonly("n_categories", &ModelParams::n_categories)
      .def_property_readonly("pi_logits", [](const ModelParams& p) { return to_array(p.pi_logits); })
      .def_property_readonly("theta_logits",
                             [](const ModelParams& p) {
                               Array out({p.n_annotators, p.n_categories, p.n_categories});
                               std::copy(p.theta_logits.begin(), p.theta_logits.end(), out.mutable_data());
                               return out;
                             })
      .def_property_readonly("prevalence", [](const ModelParams& p) { return to_array(normalize(p).prevalence); })
      .def_property_readonly("confusion", [](const ModelParams& p) { return to_array(normalize(p).confusion); });

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("objective_trace", &FitResult::objective_trace)
      .def_readonly("initial_objective", &FitResult::initial_objective)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("steps_run", &FitResult::steps_run);

  m.def(
      "fit_map",
      [](const SparseAnnotationSet& data, double learning_rate, std::size_t max_steps, std::uint64_t seed,
         double init_scale, double prior_diag, double prior_off) {
        FitConfig cfg;
        cfg.learning_rate = learning_rate;
        cfg.max_steps = max_steps;
        cfg.seed = seed;
        cfg.init_scale = init_scale;
        py::gil_scoped_release release;
        return fit_map(data, priors_for(data, prior_diag, prior_off), cfg);
      },
      py::arg("data"), py::arg("learning_rate") = 1e-2, py::arg("max_steps") = 2000, py::arg("seed") = 0,
      py::arg("init_scale") = 0.01, py::arg("prior_diag") = 2.0, py::arg("prior_off") = 0.5);

  m.def(
      "log_joint",
      [](const ModelParams& p, const SparseAnnotationSet& data, double prior_diag, double prior_off) {
        return log_joint(p, data, priors_for(data, prior_diag, prior_off));
      },
      py::arg("params"), py::arg("data"), py::arg("prior_diag") = 2.0, py::arg("prior_off") = 0.5);

  m.def(
      "gradient",
      [](const ModelParams& p, const SparseAnnotationSet& data, double prior_diag, double prior_off) {
        return gradient(p, data, priors_for(data, prior_diag, prior_off));
      },
      py::arg("params"), py::arg("data"), py::arg("prior_diag") = 2.0, py::arg("prior_off") = 0.5,
      "Gradient of log_joint with respect to the logits, returned as Params-shaped logits.");

  m.def(
      "posterior_labels",
      [](const ModelParams& p, const SparseAnnotationSet& data) { return to_array(posterior_labels(p, data)); },
      py::arg("params"), py::arg("data"));

  m.def(
      "sample_gibbs",
      [](const SparseAnnotationSet& data, std::size_t n_samples, std::size_t burn_in, std::size_t thinning,
         std::uint64_t seed, double prior_diag, double prior_off) {
        GibbsConfig cfg;
        cfg.n_samples = n_samples;
        cfg.burn_in = burn_in;
        cfg.thinning = thinning;
        cfg.seed = seed;
        cfg.record_labels = false;
        PosteriorSamples samples;
        {
          py::gil_scoped_release release;
          samples = sample_gibbs(data, priors_for(data, prior_diag, prior_off), cfg);
        }
        py::dict d;
        d["prevalence"] = to_array(samples.prevalence_samples);
        d["mean_prevalence"] = to_array(samples.mean_prevalence());
        d["mean_confusion"] = to_array(samples.mean_confusion());
        return d;
      },
      py::arg("data"), py::arg("n_samples") = 2000, py::arg("burn_in") = 500, py::arg("thinning") = 1,
      py::arg("seed") = 0, py::arg("prior_diag") = 2.0, py::arg("prior_off") = 0.5);

  m.def(
      "em_reference",
      [](const SparseAnnotationSet& data, std::size_t max_iterations, double tolerance) {
        const auto r = em_reference(data, EmConfig{max_iterations, tolerance});
        py::dict d;
        d["prevalence"] = to_array(r.params.prevalence);
        d["confusion"] = to_array(r.params.confusion);
        d["log_likelihood_trace"] = r.log_likelihood_trace;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("data"), py::arg("max_iterations") = 1000, py::arg("tolerance") = 1e-12);

  m.def(
      "binary_metrics",
      [](const Array& confusion, const std::optional<Array>& prevalence) {
        if (confusion.ndim() != 2) throw Error(ErrorKind::kShape, "confusion must be a 2-d matrix");
        Matrix c(confusion.shape(0), confusion.shape(1));
        std::copy(confusion.data(), confusion.data() + confusion.size(), c.values().begin());
        std::vector<double> pi = prevalence ? vector_from(*prevalence) : std::vector<double>{};
        return metrics_dict(binary_metrics(c, pi));
      },
      py::arg("confusion"), py::arg("prevalence") = py::none());

  m.def(
      "percentile_rank", [](double value, const std::vector<double>& pool) { return percentile_rank(value, pool); },
      py::arg("value"), py::arg("pool"));
  m.def("pabak", &pabak, py::arg("data"));

  m.def(
      "generate",
      [](std::size_t n_items, const std::vector<double>& prevalence, const std::vector<double>& diagonal,
         double coverage, std::uint64_t seed) {
        const auto spec = make_symmetric_spec(n_items, prevalence, diagonal, coverage, seed);
        auto ds = generate(spec);
        return py::make_tuple(std::move(ds.data), ds.true_labels, ds.warnings);
      },
      py::arg("n_items"), py::arg("prevalence"), py::arg("diagonal"), py::arg("coverage") = 1.0,
      py::arg("seed") = 0, "Returns (AnnotationSet, true_labels, warnings).");

  m.def(
      "brute_force_posterior",
      [](const Array& prevalence, const Array& confusion, const SparseAnnotationSet& data) {
        const auto pi = vector_from(prevalence);
        return to_array(brute_force_posterior(pi, confusion_from(confusion), data));
      },
      py::arg("prevalence"), py::arg("confusion"), py::arg("data"));

  m.def(
      "parse_llm_response",
      [](std::string_view raw) {
        const auto labels = parse_llm_response(raw);
        py::dict d;
        for (auto f : kFoundations) d[py::str(std::string(foundation_name(f)))] = labels[f];
        return d;
      },
      py::arg("raw_text"));

  m.def(
      "build_prompt",
      [](std::string_view text, std::string_view template_id) { return build_prompt(text, template_id); },
      py::arg("text"), py::arg("template") = "plain");
}
