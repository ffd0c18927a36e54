#include "dsbayes/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsbayes/error.hpp"
#include "log_params.hpp"

namespace dsbayes {

namespace {

constexpr double kStochasticTolerance = 1e-12;

void check_probability_vector(std::span<const double> row, const std::string& what) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kValidation, what + " has an entry outside [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw Error(ErrorKind::kValidation, what + " does not sum to 1");
  }
}

}  // namespace

ConfusionTensor ConfusionTensor::identity(std::size_t n_annotators, std::size_t n_categories) {
  ConfusionTensor out(n_annotators, n_categories);
  for (std::size_t j = 0; j < n_annotators; ++j) {
    for (std::size_t k = 0; k < n_categories; ++k) out(j, k, k) = 1.0;
  }
  return out;
}

ConfusionTensor ConfusionTensor::symmetric(std::span<const double> diagonal,
                                           std::size_t n_categories) {
  ConfusionTensor out(diagonal.size(), n_categories);
  for (std::size_t j = 0; j < diagonal.size(); ++j) {
    const double d = diagonal[j];
    if (!(d >= 0.0 && d <= 1.0)) {
      throw Error(ErrorKind::kInvalidParameter, "diagonal probability outside [0, 1]");
    }
    if (n_categories == 1 && d != 1.0) {
      throw Error(ErrorKind::kInvalidParameter, "K = 1 requires a unit diagonal");
    }
    const double off = n_categories > 1 ? (1.0 - d) / static_cast<double>(n_categories - 1) : 0.0;
    for (std::size_t k = 0; k < n_categories; ++k) {
      for (std::size_t l = 0; l < n_categories; ++l) out(j, k, l) = k == l ? d : off;
    }
  }
  return out;
}

Matrix ConfusionTensor::slice(std::size_t j) const {
  if (j >= n_annotators_) throw Error(ErrorKind::kLookup, "annotator index " + std::to_string(j));
  Matrix m(n_categories_, n_categories_);
  for (std::size_t k = 0; k < n_categories_; ++k) {
    for (std::size_t l = 0; l < n_categories_; ++l) m(k, l) = (*this)(j, k, l);
  }
  return m;
}

void ConfusionTensor::validate() const {
  for (std::size_t j = 0; j < n_annotators_; ++j) {
    for (std::size_t k = 0; k < n_categories_; ++k) {
      check_probability_vector(row(j, k), "confusion row (" + std::to_string(j) + ", " +
                                              std::to_string(k) + ")");
    }
  }
}

void ModelParams::check_shape() const {
  if (pi_logits.size() != n_categories ||
      theta_logits.size() != n_annotators * n_categories * n_categories) {
    throw Error(ErrorKind::kShape, "parameter vectors do not match J=" +
                                       std::to_string(n_annotators) +
                                       ", K=" + std::to_string(n_categories));
  }
}

bool ModelParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(pi_logits.begin(), pi_logits.end(), finite) &&
         std::all_of(theta_logits.begin(), theta_logits.end(), finite);
}

PriorSpec PriorSpec::defaults(std::size_t n_categories, double diagonal, double off_diagonal) {
  PriorSpec prior;
  prior.alpha.assign(n_categories, 1.0);
  prior.beta = Matrix(n_categories, n_categories, off_diagonal);
  for (std::size_t k = 0; k < n_categories; ++k) prior.beta(k, k) = diagonal;
  prior.validate();
  return prior;
}

void PriorSpec::validate() const {
  const std::size_t k = alpha.size();
  if (beta.rows() != k || beta.cols() != k) {
    throw Error(ErrorKind::kShape, "beta must be K x K with K = len(alpha)");
  }
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!std::all_of(alpha.begin(), alpha.end(), positive) ||
      !std::all_of(beta.values().begin(), beta.values().end(), positive)) {
    throw Error(ErrorKind::kInvalidParameter, "Dirichlet hyperparameters must be positive");
  }
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  const double norm = log_sum_exp(logits);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - norm;
}

ProbabilityParams normalize(const ModelParams& params) {
  params.check_shape();
  if (!params.all_finite()) {
    throw Error(ErrorKind::kInvalidParameter, "logits must be finite");
  }
  const auto lp = detail::LogParams::from_logits(params);
  ProbabilityParams out;
  out.prevalence.resize(lp.log_pi.size());
  std::transform(lp.log_pi.begin(), lp.log_pi.end(), out.prevalence.begin(),
                 [](double v) { return std::exp(v); });
  out.confusion = ConfusionTensor(params.n_annotators, params.n_categories);
  std::transform(lp.log_theta.begin(), lp.log_theta.end(), out.confusion.values().begin(),
                 [](double v) { return std::exp(v); });
  return out;
}

ModelParams to_logits(const ProbabilityParams& probabilities) {
  const auto& conf = probabilities.confusion;
  if (probabilities.prevalence.size() != conf.n_categories()) {
    throw Error(ErrorKind::kShape, "prevalence length must equal K");
  }
  ModelParams params(conf.n_annotators(), conf.n_categories());
  auto safe_log = [](double p) {
    if (!(p > 0.0)) throw Error(ErrorKind::kInvalidParameter, "probability must be > 0");
    return std::log(p);
  };
  std::transform(probabilities.prevalence.begin(), probabilities.prevalence.end(),
                 params.pi_logits.begin(), safe_log);
  std::transform(conf.values().begin(), conf.values().end(), params.theta_logits.begin(),
                 safe_log);
  return params;
}

double log_dirichlet_density(std::span<const double> log_x, std::span<const double> concentration) {
  double total_concentration = 0.0;
  double value = 0.0;
  for (std::size_t k = 0; k < concentration.size(); ++k) {
    total_concentration += concentration[k];
    value -= std::lgamma(concentration[k]);
    value += (concentration[k] - 1.0) * log_x[k];
  }
  return value + std::lgamma(total_concentration);
}

void check_dimensions(const ModelParams& params, const SparseAnnotationSet& data) {
  params.check_shape();
  if (params.n_categories != data.n_categories() || params.n_annotators != data.n_annotators()) {
    throw Error(ErrorKind::kShape,
                "data has J=" + std::to_string(data.n_annotators()) +
                    ", K=" + std::to_string(data.n_categories()) + " but params have J=" +
                    std::to_string(params.n_annotators) + ", K=" +
                    std::to_string(params.n_categories));
  }
}

void check_dimensions(const ModelParams& params, const SparseAnnotationSet& data,
                      const PriorSpec& priors) {
  check_dimensions(params, data);
  if (priors.n_categories() != params.n_categories || priors.beta.rows() != params.n_categories ||
      priors.beta.cols() != params.n_categories) {
    throw Error(ErrorKind::kShape, "prior dimensions do not match K");
  }
}

namespace {

double data_term(const detail::LogParams& lp, const SparseAnnotationSet& data) {
  std::vector<double> scores(lp.n_categories);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    detail::item_log_scores(lp, data, i, scores);
    total += log_sum_exp(scores);
  }
  return total;
}

void require_finite_params(const ModelParams& params) {
  if (!params.all_finite()) throw Error(ErrorKind::kInvalidParameter, "logits must be finite");
}

}  // namespace

double log_likelihood(const ModelParams& params, const SparseAnnotationSet& data) {
  check_dimensions(params, data);
  require_finite_params(params);
  const double value = data_term(detail::LogParams::from_logits(params), data);
  if (!std::isfinite(value)) throw Error(ErrorKind::kNumeric, "log-likelihood is not finite");
  return value;
}

double log_joint(const ModelParams& params, const SparseAnnotationSet& data,
                 const PriorSpec& priors) {
  check_dimensions(params, data, priors);
  require_finite_params(params);
  const auto lp = detail::LogParams::from_logits(params);
  const double value = data_term(lp, data) + detail::log_prior(lp, priors);
  if (!std::isfinite(value)) throw Error(ErrorKind::kNumeric, "log-joint is not finite");
  return value;
}

namespace {

Matrix log_posterior_from(const detail::LogParams& lp, const SparseAnnotationSet& data) {
  Matrix out(data.n_items(), lp.n_categories);
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    auto row = out.row(i);
    detail::item_log_scores(lp, data, i, row);
    const double norm = log_sum_exp(row);
    if (!std::isfinite(norm)) {
      throw Error(ErrorKind::kNumeric,
                  "item " + std::to_string(i) + " has zero probability under every class");
    }
    for (double& v : row) v -= norm;
  }
  return out;
}

PosteriorMatrix exponentiate(Matrix log_post) {
  for (double& v : log_post.values()) v = std::exp(v);
  return log_post;
}

}  // namespace

Matrix log_posterior_labels(const ModelParams& params, const SparseAnnotationSet& data) {
  check_dimensions(params, data);
  require_finite_params(params);
  return log_posterior_from(detail::LogParams::from_logits(params), data);
}

PosteriorMatrix posterior_labels(const ModelParams& params, const SparseAnnotationSet& data) {
  return exponentiate(log_posterior_labels(params, data));
}

PosteriorMatrix posterior_labels(const ProbabilityParams& params, const SparseAnnotationSet& data) {
  const auto& conf = params.confusion;
  if (params.prevalence.size() != data.n_categories() ||
      conf.n_categories() != data.n_categories() || conf.n_annotators() != data.n_annotators()) {
    throw Error(ErrorKind::kShape, "probability parameters do not match the data");
  }
  return exponentiate(log_posterior_from(detail::LogParams::from_probabilities(params), data));
}

std::vector<std::size_t> map_labels(const PosteriorMatrix& posterior) {
  std::vector<std::size_t> labels(posterior.rows(), 0);
  for (std::size_t i = 0; i < posterior.rows(); ++i) {
    const auto row = posterior.row(i);
    // max_element returns the first maximum, which is the lowest index on ties.
    labels[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

std::vector<double> competence(const ConfusionTensor& confusion) {
  const std::size_t k_count = confusion.n_categories();
  std::vector<double> out(confusion.n_annotators(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double diag = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) diag += confusion(j, k, k);
    out[j] = diag / static_cast<double>(k_count);
  }
  return out;
}

namespace detail {

LogParams LogParams::from_logits(const ModelParams& params) {
  LogParams lp;
  lp.n_annotators = params.n_annotators;
  lp.n_categories = params.n_categories;
  const std::size_t k_count = params.n_categories;
  lp.log_pi.resize(k_count);
  log_softmax(params.pi_logits, lp.log_pi);
  lp.log_theta.resize(params.theta_logits.size());
  for (std::size_t row = 0; row < params.n_annotators * k_count; ++row) {
    log_softmax(std::span<const double>(params.theta_logits).subspan(row * k_count, k_count),
                std::span<double>(lp.log_theta).subspan(row * k_count, k_count));
  }
  lp.fill_transpose();
  return lp;
}

LogParams LogParams::from_probabilities(const ProbabilityParams& params) {
  params.confusion.validate();
  LogParams lp;
  lp.n_annotators = params.confusion.n_annotators();
  lp.n_categories = params.confusion.n_categories();
  lp.log_pi.resize(params.prevalence.size());
  std::transform(params.prevalence.begin(), params.prevalence.end(), lp.log_pi.begin(),
                 [](double p) { return std::log(p); });
  const auto values = params.confusion.values();
  lp.log_theta.resize(values.size());
  std::transform(values.begin(), values.end(), lp.log_theta.begin(),
                 [](double p) { return std::log(p); });
  lp.fill_transpose();
  return lp;
}

void LogParams::fill_transpose() {
  const std::size_t k_count = n_categories;
  log_theta_by_label.resize(log_theta.size());
  for (std::size_t j = 0; j < n_annotators; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t l = 0; l < k_count; ++l) {
        log_theta_by_label[(j * k_count + l) * k_count + k] =
            log_theta[(j * k_count + k) * k_count + l];
      }
    }
  }
}

void item_log_scores(const LogParams& lp, const SparseAnnotationSet& data, std::size_t item,
                     std::span<double> scores) {
  std::copy(lp.log_pi.begin(), lp.log_pi.end(), scores.begin());
  for (const auto& a : data.item_annotations(item)) {
    const auto emission = lp.emission(a.annotator, a.label);
    for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += emission[k];
  }
}

double log_prior(const LogParams& lp, const PriorSpec& priors) {
  const std::size_t k_count = lp.n_categories;
  double value = log_dirichlet_density(lp.log_pi, priors.alpha);
  for (std::size_t j = 0; j < lp.n_annotators; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      value += log_dirichlet_density(
          std::span<const double>(lp.log_theta).subspan((j * k_count + k) * k_count, k_count),
          priors.beta.row(k));
    }
  }
  return value;
}

}  // namespace detail

}  // namespace dsbayes
