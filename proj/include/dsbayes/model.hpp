#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsbayes/annotations.hpp"

namespace dsbayes {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Per-item categorical posterior over the true label, N x K.
using PosteriorMatrix = Matrix;

/// Row-stochastic J x K x K tensor: (j, k, l) = P(annotator j emits l | true class k).
class ConfusionTensor {
 public:
  ConfusionTensor() = default;
  ConfusionTensor(std::size_t n_annotators, std::size_t n_categories, double fill = 0.0)
      : n_annotators_(n_annotators),
        n_categories_(n_categories),
        values_(n_annotators * n_categories * n_categories, fill) {}

  /// Identity confusion for every annotator.
  static ConfusionTensor identity(std::size_t n_annotators, std::size_t n_categories);
  /// Every annotator is correct with probability `diagonal[j]`; errors spread evenly.
  static ConfusionTensor symmetric(std::span<const double> diagonal, std::size_t n_categories);

  std::size_t n_annotators() const noexcept { return n_annotators_; }
  std::size_t n_categories() const noexcept { return n_categories_; }

  double& operator()(std::size_t j, std::size_t k, std::size_t l) {
    return values_[(j * n_categories_ + k) * n_categories_ + l];
  }
  double operator()(std::size_t j, std::size_t k, std::size_t l) const {
    return values_[(j * n_categories_ + k) * n_categories_ + l];
  }

  std::span<const double> row(std::size_t j, std::size_t k) const {
    return {values_.data() + (j * n_categories_ + k) * n_categories_, n_categories_};
  }
  std::span<double> row(std::size_t j, std::size_t k) {
    return {values_.data() + (j * n_categories_ + k) * n_categories_, n_categories_};
  }

  /// The K x K confusion matrix of one annotator.
  Matrix slice(std::size_t j) const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Throws a validation error unless every row is a probability vector (tolerance 1e-12).
  void validate() const;

  friend bool operator==(const ConfusionTensor&, const ConfusionTensor&) = default;

 private:
  std::size_t n_annotators_ = 0;
  std::size_t n_categories_ = 0;
  std::vector<double> values_;
};

/// Unconstrained logits for the prevalence (K) and the confusion tensor (J x K x K).
struct ModelParams {
  std::size_t n_annotators = 0;
  std::size_t n_categories = 0;
  std::vector<double> pi_logits;
  std::vector<double> theta_logits;

  ModelParams() = default;
  ModelParams(std::size_t annotators, std::size_t categories)
      : n_annotators(annotators),
        n_categories(categories),
        pi_logits(categories, 0.0),
        theta_logits(annotators * categories * categories, 0.0) {}

  double& theta(std::size_t j, std::size_t k, std::size_t l) {
    return theta_logits[(j * n_categories + k) * n_categories + l];
  }
  double theta(std::size_t j, std::size_t k, std::size_t l) const {
    return theta_logits[(j * n_categories + k) * n_categories + l];
  }

  /// Throws a shape error when vector lengths disagree with the declared sizes.
  void check_shape() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Dirichlet hyperparameters: `alpha` for the prevalence, row k of `beta` for
/// every annotator's confusion row of true class k.
struct PriorSpec {
  std::vector<double> alpha;
  Matrix beta;

  /// alpha = 1, beta = `diagonal` on the diagonal and `off_diagonal` elsewhere.
  static PriorSpec defaults(std::size_t n_categories, double diagonal = 2.0,
                            double off_diagonal = 0.5);

  std::size_t n_categories() const noexcept { return alpha.size(); }
  void validate() const;
};

/// Parameters on the probability scale.
struct ProbabilityParams {
  std::vector<double> prevalence;
  ConfusionTensor confusion;
};

ProbabilityParams normalize(const ModelParams& params);

/// Log-logits for the given probabilities (log of each entry); entries must be > 0.
ModelParams to_logits(const ProbabilityParams& probabilities);

/// log Dirichlet(x; concentration) given log x, including the normalizing constant.
double log_dirichlet_density(std::span<const double> log_x, std::span<const double> concentration);

/// Log posterior density up to the evidence: data log-likelihood with the
/// true labels summed out, plus the Dirichlet log-priors of pi and theta.
double log_joint(const ModelParams& params, const SparseAnnotationSet& data,
                 const PriorSpec& priors);

/// Data term of log_joint alone.
double log_likelihood(const ModelParams& params, const SparseAnnotationSet& data);

/// Row i holds P(z_i = k | data, params), computed in log space.
PosteriorMatrix posterior_labels(const ModelParams& params, const SparseAnnotationSet& data);
PosteriorMatrix posterior_labels(const ProbabilityParams& params, const SparseAnnotationSet& data);

/// Per-row log posterior; exp of each row sums to one.
Matrix log_posterior_labels(const ModelParams& params, const SparseAnnotationSet& data);

/// Row-wise argmax, ties resolved toward the lowest category index.
std::vector<std::size_t> map_labels(const PosteriorMatrix& posterior);

/// Mean diagonal of each annotator's confusion matrix.
std::vector<double> competence(const ConfusionTensor& confusion);

/// Numerically stable log(sum(exp(values))).
double log_sum_exp(std::span<const double> values);

/// In-place log-softmax over a contiguous block.
void log_softmax(std::span<const double> logits, std::span<double> out);

void check_dimensions(const ModelParams& params, const SparseAnnotationSet& data);
void check_dimensions(const ModelParams& params, const SparseAnnotationSet& data,
                      const PriorSpec& priors);

}  // namespace dsbayes
