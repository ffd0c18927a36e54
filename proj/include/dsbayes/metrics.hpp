#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsbayes/annotations.hpp"
#include "dsbayes/inference.hpp"
#include "dsbayes/model.hpp"

namespace dsbayes {

/// Rates derived from a binary confusion matrix; class 1 is the positive class.
struct BinaryMetrics {
  double balanced_accuracy = 0.0;
  /// Absent when the expected number of positive calls is zero.
  std::optional<double> precision;
  double recall = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double competence = 0.0;
};

/// Metrics of one 2 x 2 row-stochastic confusion matrix under prevalence `prevalence`.
///
/// recall and the true-negative rate are computed as complements of the
/// off-diagonal error rates, so recall == 1 - fnr and
/// balanced_accuracy == 1 - (fpr + fnr) / 2 hold bit for bit. Precision is
/// the expected share of true positives among positive calls under the
/// model prevalence; it is absent when `prevalence` is empty or nothing is
/// called positive.
BinaryMetrics binary_metrics(const Matrix& confusion, std::span<const double> prevalence);

/// Midrank percentile of `value` among `pool`: 100 * (#below + #equal / 2) / |pool|.
double percentile_rank(double value, std::span<const double> pool);

/// Prevalence- and bias-adjusted kappa 2 p_o - 1, with p_o pooled over every
/// unordered annotator pair on every co-annotated item. Absent when no item
/// has two annotations.
std::optional<double> pabak(const SparseAnnotationSet& data);

struct AnnotatorMetrics {
  std::size_t annotator = 0;
  std::string name;
  AnnotatorKind kind = AnnotatorKind::kHuman;
  BinaryMetrics metrics;
  std::optional<double> percentile;
};

/// Metrics of `target` under a fitted model, ranked by balanced accuracy
/// against the annotators in `humans`. The percentile is absent when
/// `humans` is empty.
AnnotatorMetrics evaluate_annotator(const FitResult& fit, const SparseAnnotationSet& data,
                                    std::size_t target, std::span<const std::size_t> humans);
AnnotatorMetrics evaluate_annotator(const ProbabilityParams& params, std::size_t target,
                                    std::span<const std::size_t> humans);

struct MetricsReport {
  std::string foundation;
  std::string dataset;
  std::vector<AnnotatorMetrics> annotators;
  /// Unweighted mean over human annotators; absent with no humans.
  std::optional<BinaryMetrics> human_average;
};

/// Evaluates every annotator. Percentiles are reported for model annotators
/// only, ranked against the human pool.
MetricsReport build_report(const ProbabilityParams& params, std::span<const std::string> names,
                           std::span<const AnnotatorKind> kinds, std::string foundation,
                           std::string dataset);

/// Long-form per-annotator table (one row per annotator plus the human average).
std::string report_to_csv(const MetricsReport& report);
/// Same content as an aligned plain-text table.
std::string report_to_text(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);

/// Balanced accuracy (%) and percentile per model, with the human average,
/// one column per foundation.
std::string accuracy_table_csv(std::span<const MetricsReport> reports);
std::string accuracy_table_text(std::span<const MetricsReport> reports);
/// FNR and FPR (%) per model and the human baseline, two columns per foundation.
std::string error_rate_table_csv(std::span<const MetricsReport> reports);
std::string error_rate_table_text(std::span<const MetricsReport> reports);
std::string reports_to_json(std::span<const MetricsReport> reports);

}  // namespace dsbayes
