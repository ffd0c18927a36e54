#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsbayes/annotations.hpp"
#include "dsbayes/model.hpp"

namespace dsbayes {

struct FitConfig {
  double learning_rate = 1e-2;
  std::size_t max_steps = 2000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
  // Early stop once the objective moves by less than this relative amount
  // over `convergence_window` steps.
  double convergence_tolerance = 1e-9;
  std::size_t convergence_window = 50;

  void validate() const;
};

struct FitResult {
  ModelParams params;
  /// Log-joint after each step; length equals steps_run.
  std::vector<double> objective_trace;
  /// Log-joint at the initial parameters.
  double initial_objective = 0.0;
  bool converged = false;
  std::size_t steps_run = 0;
  FitConfig config;

  double final_objective() const {
    return objective_trace.empty() ? initial_objective : objective_trace.back();
  }
};

/// Log-joint together with its gradient with respect to both logit arrays.
struct ValueAndGradient {
  double value = 0.0;
  ModelParams gradient;
};

/// d log_joint / d logits, derived analytically through the log-softmax maps.
ModelParams gradient(const ModelParams& params, const SparseAnnotationSet& data,
                     const PriorSpec& priors);
ValueAndGradient value_and_gradient(const ModelParams& params, const SparseAnnotationSet& data,
                                    const PriorSpec& priors);

/// First and second moment estimates of Adam over a flat parameter vector.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

/// One bias-corrected Adam update moving `params` along +gradient (ascent).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient,
               const FitConfig& cfg);
void adam_step(AdamState& state, ModelParams& params, const ModelParams& gradient,
               const FitConfig& cfg);

/// Small random logits of scale cfg.init_scale with +1 on the confusion diagonals.
ModelParams initial_params(std::size_t n_annotators, std::size_t n_categories,
                           const FitConfig& cfg);

/// MAP estimate by Adam ascent on log_joint from initial_params(cfg).
FitResult fit_map(const SparseAnnotationSet& data, const PriorSpec& priors, const FitConfig& cfg);
/// Same, starting from caller-provided logits.
FitResult fit_map_from(ModelParams initial, const SparseAnnotationSet& data,
                       const PriorSpec& priors, const FitConfig& cfg);

struct GibbsConfig {
  /// Total number of sweeps, burn-in included.
  std::size_t n_samples = 2000;
  std::size_t burn_in = 500;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
  bool record_labels = true;

  /// Sweeps kept after burn-in and thinning.
  std::size_t retained() const;
  void validate() const;
};

struct PosteriorSamples {
  std::size_t n_items = 0;
  Matrix prevalence_samples;                    // S x K
  std::vector<ConfusionTensor> confusion_samples;  // S of J x K x K
  std::vector<std::uint32_t> label_samples;     // S x N, row-major; empty if not recorded

  std::size_t size() const noexcept { return prevalence_samples.rows(); }
  std::span<const std::uint32_t> labels(std::size_t sample) const {
    return std::span<const std::uint32_t>(label_samples).subspan(sample * n_items, n_items);
  }

  std::vector<double> mean_prevalence() const;
  ConfusionTensor mean_confusion() const;
  ProbabilityParams mean() const { return {mean_prevalence(), mean_confusion()}; }
};

/// Blocked Gibbs sampler exploiting Dirichlet-categorical conjugacy.
PosteriorSamples sample_gibbs(const SparseAnnotationSet& data, const PriorSpec& priors,
                              const GibbsConfig& cfg);

struct EmConfig {
  std::size_t max_iterations = 1000;
  /// Stop when the log-likelihood gain falls below this relative amount.
  double tolerance = 1e-12;
};

struct EmResult {
  ProbabilityParams params;
  /// Data log-likelihood after each M-step.
  std::vector<double> log_likelihood_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Maximum-likelihood Dawid-Skene EM without priors, initialized from soft
/// majority votes. Requires every annotator to have at least one annotation.
EmResult em_reference(const SparseAnnotationSet& data, const EmConfig& cfg = {});

}  // namespace dsbayes
