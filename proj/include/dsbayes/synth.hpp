#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsbayes/annotations.hpp"
#include "dsbayes/inference.hpp"
#include "dsbayes/model.hpp"

namespace dsbayes {

/// Ground truth for forward-sampling the annotation model.
struct SynthSpec {
  std::size_t n_items = 0;
  std::size_t n_annotators = 0;
  std::size_t n_categories = 2;
  std::vector<double> true_prevalence;
  ConfusionTensor true_confusion;
  /// Probability that a given annotator labels a given item.
  double coverage = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Spec whose annotator j is correct with probability diagonal[j].
SynthSpec make_symmetric_spec(std::size_t n_items, std::vector<double> prevalence,
                              std::span<const double> diagonal, double coverage,
                              std::uint64_t seed);

struct SynthDataset {
  SparseAnnotationSet data;
  std::vector<std::size_t> true_labels;
  std::vector<std::string> warnings;
};

/// Draws z_i, a coverage mask per item (redrawn until nonempty) and labels
/// y_ij ~ theta_j row z_i. Deterministic for a given spec and seed.
SynthDataset generate(const SynthSpec& spec);

/// `n_tasks` independent tasks over one shared coverage mask: the same
/// (item, annotator) pairs are annotated in every task, while true labels and
/// emitted labels are drawn per task. generate(spec) is the one-task case.
std::vector<SynthDataset> generate_tasks(const SynthSpec& spec, std::size_t n_tasks);

/// Posterior over true labels evaluated directly as normalized products
/// pi_k * prod_j theta(j, k, y_ij). Refuses N > 1000 or K > 5.
PosteriorMatrix brute_force_posterior(std::span<const double> prevalence,
                                      const ConfusionTensor& confusion,
                                      const SparseAnnotationSet& data);

struct RecoveryError {
  double prevalence_max_abs_err = 0.0;
  double confusion_max_abs_err = 0.0;
  double label_accuracy = 0.0;
};

RecoveryError recovery_error(const ProbabilityParams& estimate, const SynthSpec& spec,
                             const SynthDataset& dataset);
RecoveryError recovery_error(const FitResult& fit, const SynthSpec& spec,
                             const SynthDataset& dataset);
/// Regenerates the dataset from the spec.
RecoveryError recovery_error(const FitResult& fit, const SynthSpec& spec);

}  // namespace dsbayes
