#pragma once

#include <span>
#include <vector>

#include "dsbayes/model.hpp"

namespace dsbayes::detail {

// Log-probabilities of the prevalence and the confusion tensor. The confusion
// is stored transposed as (j, l, k) so that looking up an emitted label l
// yields a contiguous K-vector over true classes.
struct LogParams {
  std::size_t n_annotators = 0;
  std::size_t n_categories = 0;
  std::vector<double> log_pi;
  std::vector<double> log_theta;             // (j, k, l)
  std::vector<double> log_theta_by_label;    // (j, l, k)

  static LogParams from_logits(const ModelParams& params);
  static LogParams from_probabilities(const ProbabilityParams& params);

  std::span<const double> emission(std::size_t j, std::size_t l) const {
    return {log_theta_by_label.data() + (j * n_categories + l) * n_categories, n_categories};
  }

  void fill_transpose();
};

// scores[k] = log pi_k + sum over annotations of item i of log theta(j, k, y_ij)
void item_log_scores(const LogParams& lp, const SparseAnnotationSet& data, std::size_t item,
                     std::span<double> scores);

double log_prior(const LogParams& lp, const PriorSpec& priors);

}  // namespace dsbayes::detail
