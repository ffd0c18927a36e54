#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsbayes/annotations.hpp"
#include "dsbayes/inference.hpp"
#include "dsbayes/model.hpp"
#include "dsbayes/synth.hpp"

namespace dsbayes {

/// Persisted outcome of fitting one task: probabilities, the optimizer
/// trace and the configuration that produced them. Serialized with a fixed
/// key order so that identical fits give identical bytes.
struct FitDocument {
  std::string task;
  /// "map" or "gibbs"; for gibbs the probabilities are posterior means.
  std::string sampler = "map";
  std::uint64_t seed = 0;
  std::optional<FitConfig> map_config;
  std::optional<GibbsConfig> gibbs_config;
  double prior_diagonal = 2.0;
  double prior_off_diagonal = 0.5;
  std::size_t n_items = 0;
  std::vector<std::string> annotator_ids;
  std::vector<AnnotatorKind> annotator_kinds;
  ProbabilityParams params;
  std::vector<double> objective_trace;
  std::size_t steps_run = 0;
  bool converged = false;
  bool reliability_warning = false;

  std::string to_json() const;
  static FitDocument from_json(const std::string& text);
};

FitDocument make_fit_document(const FitResult& fit, std::string task, std::size_t n_items,
                              std::vector<std::string> annotator_ids,
                              std::vector<AnnotatorKind> annotator_kinds);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace dsbayes
