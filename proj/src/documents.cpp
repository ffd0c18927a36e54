#include "dsbayes/documents.hpp"

#include <nlohmann/json.hpp>

#include "dsbayes/corpus.hpp"
#include "dsbayes/error.hpp"

namespace dsbayes {

namespace {

using ojson = nlohmann::ordered_json;

ojson fit_config_json(const FitConfig& c) {
  ojson j;
  j["learning_rate"] = c.learning_rate;
  j["max_steps"] = c.max_steps;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["init_scale"] = c.init_scale;
  j["convergence_tolerance"] = c.convergence_tolerance;
  j["convergence_window"] = c.convergence_window;
  return j;
}

FitConfig fit_config_from(const nlohmann::json& j, std::uint64_t seed) {
  FitConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_steps = j.at("max_steps").get<std::size_t>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.convergence_tolerance = j.at("convergence_tolerance").get<double>();
  c.convergence_window = j.at("convergence_window").get<std::size_t>();
  c.seed = seed;
  return c;
}

ojson gibbs_config_json(const GibbsConfig& c) {
  ojson j;
  j["n_samples"] = c.n_samples;
  j["burn_in"] = c.burn_in;
  j["thinning"] = c.thinning;
  return j;
}

GibbsConfig gibbs_config_from(const nlohmann::json& j, std::uint64_t seed) {
  GibbsConfig c;
  c.n_samples = j.at("n_samples").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.thinning = j.at("thinning").get<std::size_t>();
  c.seed = seed;
  return c;
}

ojson confusion_json(const ConfusionTensor& t) {
  ojson out = ojson::array();
  for (std::size_t j = 0; j < t.n_annotators(); ++j) {
    ojson matrix = ojson::array();
    for (std::size_t k = 0; k < t.n_categories(); ++k) {
      const auto row = t.row(j, k);
      matrix.push_back(std::vector<double>(row.begin(), row.end()));
    }
    out.push_back(std::move(matrix));
  }
  return out;
}

ConfusionTensor confusion_from(const nlohmann::json& j, std::size_t k_count) {
  ConfusionTensor t(j.size(), k_count);
  for (std::size_t a = 0; a < j.size(); ++a) {
    if (j[a].size() != k_count) throw Error(ErrorKind::kShape, "confusion matrix must be K x K");
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto row = j[a][k].get<std::vector<double>>();
      if (row.size() != k_count) throw Error(ErrorKind::kShape, "confusion row must have K entries");
      std::copy(row.begin(), row.end(), t.row(a, k).begin());
    }
  }
  return t;
}

}  // namespace

FitDocument make_fit_document(const FitResult& fit, std::string task, std::size_t n_items,
                              std::vector<std::string> annotator_ids,
                              std::vector<AnnotatorKind> annotator_kinds) {
  FitDocument doc;
  doc.task = std::move(task);
  doc.sampler = "map";
  doc.seed = fit.config.seed;
  doc.map_config = fit.config;
  doc.n_items = n_items;
  doc.annotator_ids = std::move(annotator_ids);
  doc.annotator_kinds = std::move(annotator_kinds);
  doc.params = normalize(fit.params);
  doc.objective_trace = fit.objective_trace;
  doc.steps_run = fit.steps_run;
  doc.converged = fit.converged;
  return doc;
}

std::string FitDocument::to_json() const {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["task"] = task;
  j["sampler"] = sampler;
  j["seed"] = seed;
  ojson config;
  if (map_config) config = fit_config_json(*map_config);
  if (gibbs_config) config = gibbs_config_json(*gibbs_config);
  config["prior_diagonal"] = prior_diagonal;
  config["prior_off_diagonal"] = prior_off_diagonal;
  j["config"] = std::move(config);
  j["n_items"] = n_items;
  ojson annotators = ojson::array();
  for (std::size_t a = 0; a < annotator_ids.size(); ++a) {
    annotators.push_back({{"id", annotator_ids[a]},
                          {"kind", annotator_kinds[a] == AnnotatorKind::kModel ? "model" : "human"}});
  }
  j["annotators"] = std::move(annotators);
  j["pi"] = params.prevalence;
  j["theta"] = confusion_json(params.confusion);
  j["objective_trace"] = objective_trace;
  j["steps_run"] = steps_run;
  j["converged"] = converged;
  j["reliability_warning"] = reliability_warning;
  return j.dump(2) + "\n";
}

FitDocument FitDocument::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ParseError("unsupported fit schema_version", text);
    }
    FitDocument doc;
    doc.task = j.at("task").get<std::string>();
    doc.sampler = j.at("sampler").get<std::string>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    const auto& config = j.at("config");
    if (doc.sampler == "map") {
      doc.map_config = fit_config_from(config, doc.seed);
    } else if (doc.sampler == "gibbs") {
      doc.gibbs_config = gibbs_config_from(config, doc.seed);
    } else {
      throw ParseError("unknown sampler '" + doc.sampler + "'", text);
    }
    doc.prior_diagonal = config.at("prior_diagonal").get<double>();
    doc.prior_off_diagonal = config.at("prior_off_diagonal").get<double>();
    doc.n_items = j.at("n_items").get<std::size_t>();
    for (const auto& a : j.at("annotators")) {
      doc.annotator_ids.push_back(a.at("id").get<std::string>());
      doc.annotator_kinds.push_back(a.at("kind").get<std::string>() == "model" ? AnnotatorKind::kModel
                                                                             : AnnotatorKind::kHuman);
    }
    doc.params.prevalence = j.at("pi").get<std::vector<double>>();
    doc.params.confusion = confusion_from(j.at("theta"), doc.params.prevalence.size());
    if (doc.params.confusion.n_annotators() != doc.annotator_ids.size()) {
      throw Error(ErrorKind::kShape, "theta and annotator list disagree");
    }
    doc.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    doc.steps_run = j.at("steps_run").get<std::size_t>();
    doc.converged = j.at("converged").get<bool>();
    doc.reliability_warning = j.value("reliability_warning", false);
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed fit document: ") + e.what(), text);
  }
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["n_items"] = spec.n_items;
  j["n_annotators"] = spec.n_annotators;
  j["n_categories"] = spec.n_categories;
  j["true_prevalence"] = spec.true_prevalence;
  j["true_confusion"] = confusion_json(spec.true_confusion);
  j["coverage"] = spec.coverage;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ParseError("unsupported spec schema_version", text);
    }
    SynthSpec spec;
    spec.n_items = j.at("n_items").get<std::size_t>();
    spec.n_annotators = j.at("n_annotators").get<std::size_t>();
    spec.n_categories = j.at("n_categories").get<std::size_t>();
    spec.true_prevalence = j.at("true_prevalence").get<std::vector<double>>();
    spec.true_confusion = confusion_from(j.at("true_confusion"), spec.n_categories);
    spec.coverage = j.at("coverage").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed synthetic spec: ") + e.what(), text);
  }
}

}  // namespace dsbayes
