#include "dsbayes/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dsbayes/error.hpp"
#include "log_params.hpp"

namespace dsbayes {

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kConfig, "learning_rate must be > 0");
  if (max_steps < 1) throw Error(ErrorKind::kConfig, "max_steps must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorKind::kConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error(ErrorKind::kConfig, "adam_eps must be > 0");
  if (!(init_scale >= 0.0)) throw Error(ErrorKind::kConfig, "init_scale must be >= 0");
  if (convergence_window < 1) throw Error(ErrorKind::kConfig, "convergence_window must be >= 1");
}

// ---------------------------------------------------------------------------
// Gradient
//
// With s_ik = log pi_k + sum_j log theta(j, k, y_ij) and gamma_i = softmax(s_i),
// the data term sum_i logsumexp_k s_ik has derivative gamma_ik with respect to
// log pi_k and to each log theta(j, k, y_ij) used by item i. The Dirichlet
// priors contribute (alpha_k - 1) and (beta_kl - 1). Each block then passes
// through log-softmax: d/dx_m = g_m - p_m * sum_k g_k.
// ---------------------------------------------------------------------------

namespace {

void chain_through_log_softmax(std::span<const double> log_probs, std::span<double> grad) {
  const double total = std::accumulate(grad.begin(), grad.end(), 0.0);
  for (std::size_t m = 0; m < grad.size(); ++m) grad[m] -= std::exp(log_probs[m]) * total;
}

void check_gradient_finite(const ModelParams& g) {
  const std::size_t k_count = g.n_categories;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!std::isfinite(g.pi_logits[k])) {
      throw Error(ErrorKind::kNumeric, "non-finite gradient at pi_logits[" + std::to_string(k) + "]");
    }
  }
  for (std::size_t n = 0; n < g.theta_logits.size(); ++n) {
    if (!std::isfinite(g.theta_logits[n])) {
      const std::size_t j = n / (k_count * k_count);
      const std::size_t k = (n / k_count) % k_count;
      const std::size_t l = n % k_count;
      throw Error(ErrorKind::kNumeric, "non-finite gradient at theta_logits[" + std::to_string(j) +
                                           "][" + std::to_string(k) + "][" + std::to_string(l) +
                                           "]");
    }
  }
}

}  // namespace

ValueAndGradient value_and_gradient(const ModelParams& params, const SparseAnnotationSet& data,
                                    const PriorSpec& priors) {
  check_dimensions(params, data, priors);
  if (!params.all_finite()) throw Error(ErrorKind::kInvalidParameter, "logits must be finite");
  const auto lp = detail::LogParams::from_logits(params);
  const std::size_t k_count = params.n_categories;

  ValueAndGradient out;
  out.gradient = ModelParams(params.n_annotators, k_count);
  auto& g = out.gradient;

  std::vector<double> scores(k_count);
  double value = 0.0;
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    detail::item_log_scores(lp, data, i, scores);
    const double norm = log_sum_exp(scores);
    value += norm;
    for (double& s : scores) s = std::exp(s - norm);
    for (std::size_t k = 0; k < k_count; ++k) g.pi_logits[k] += scores[k];
    for (const auto& a : data.item_annotations(i)) {
      for (std::size_t k = 0; k < k_count; ++k) g.theta(a.annotator, k, a.label) += scores[k];
    }
  }
  value += detail::log_prior(lp, priors);

  for (std::size_t k = 0; k < k_count; ++k) g.pi_logits[k] += priors.alpha[k] - 1.0;
  chain_through_log_softmax(lp.log_pi, g.pi_logits);
  for (std::size_t j = 0; j < params.n_annotators; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t offset = (j * k_count + k) * k_count;
      for (std::size_t l = 0; l < k_count; ++l) g.theta_logits[offset + l] += priors.beta(k, l) - 1.0;
      chain_through_log_softmax(
          std::span<const double>(lp.log_theta).subspan(offset, k_count),
          std::span<double>(g.theta_logits).subspan(offset, k_count));
    }
  }

  if (!std::isfinite(value)) throw Error(ErrorKind::kNumeric, "log-joint is not finite");
  check_gradient_finite(g);
  out.value = value;
  return out;
}

ModelParams gradient(const ModelParams& params, const SparseAnnotationSet& data,
                     const PriorSpec& priors) {
  return value_and_gradient(params, data, priors).gradient;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

namespace {

// Applies the update to params[n] using moments state[offset + n].
void adam_apply(AdamState& state, std::size_t offset, std::span<double> params,
                std::span<const double> gradient, const FitConfig& cfg) {
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t n = 0; n < params.size(); ++n) {
    const double g = gradient[n];
    double& m = state.first_moment[offset + n];
    double& v = state.second_moment[offset + n];
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    params[n] += cfg.learning_rate * (m / correction1) / (std::sqrt(v / correction2) + cfg.adam_eps);
  }
}

void prepare_state(AdamState& state, std::size_t size) {
  if (state.first_moment.empty() && state.second_moment.empty() && state.step == 0) {
    state = AdamState(size);
  }
  if (state.first_moment.size() != size || state.second_moment.size() != size) {
    throw Error(ErrorKind::kShape, "Adam state size does not match the parameters");
  }
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient,
               const FitConfig& cfg) {
  if (params.size() != gradient.size()) {
    throw Error(ErrorKind::kShape, "Adam parameter and gradient sizes differ");
  }
  prepare_state(state, params.size());
  ++state.step;
  adam_apply(state, 0, params, gradient, cfg);
}

void adam_step(AdamState& state, ModelParams& params, const ModelParams& gradient,
               const FitConfig& cfg) {
  params.check_shape();
  if (gradient.pi_logits.size() != params.pi_logits.size() ||
      gradient.theta_logits.size() != params.theta_logits.size()) {
    throw Error(ErrorKind::kShape, "gradient shape does not match parameters");
  }
  // One state vector laid out as [pi_logits, theta_logits].
  const std::size_t n_pi = params.pi_logits.size();
  prepare_state(state, n_pi + params.theta_logits.size());
  ++state.step;
  adam_apply(state, 0, params.pi_logits, gradient.pi_logits, cfg);
  adam_apply(state, n_pi, params.theta_logits, gradient.theta_logits, cfg);
}

// ---------------------------------------------------------------------------
// MAP fitting
// ---------------------------------------------------------------------------

ModelParams initial_params(std::size_t n_annotators, std::size_t n_categories,
                           const FitConfig& cfg) {
  ModelParams params(n_annotators, n_categories);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : params.pi_logits) v = cfg.init_scale * noise(rng);
  for (double& v : params.theta_logits) v = cfg.init_scale * noise(rng);
  for (std::size_t j = 0; j < n_annotators; ++j) {
    for (std::size_t k = 0; k < n_categories; ++k) params.theta(j, k, k) += 1.0;
  }
  return params;
}

FitResult fit_map(const SparseAnnotationSet& data, const PriorSpec& priors, const FitConfig& cfg) {
  cfg.validate();
  return fit_map_from(initial_params(data.n_annotators(), data.n_categories(), cfg), data, priors,
                      cfg);
}

FitResult fit_map_from(ModelParams initial, const SparseAnnotationSet& data,
                       const PriorSpec& priors, const FitConfig& cfg) {
  cfg.validate();
  priors.validate();
  check_dimensions(initial, data, priors);

  FitResult result;
  result.config = cfg;
  result.params = std::move(initial);
  result.objective_trace.reserve(cfg.max_steps);

  AdamState state;
  auto current = value_and_gradient(result.params, data, priors);
  result.initial_objective = current.value;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    adam_step(state, result.params, current.gradient, cfg);
    try {
      current = value_and_gradient(result.params, data, priors);
    } catch (const Error& e) {
      throw Error(ErrorKind::kNumeric, "optimization diverged at step " + std::to_string(step) +
                                           ": " + e.what());
    }
    result.objective_trace.push_back(current.value);
    result.steps_run = step;

    if (step > cfg.convergence_window) {
      const double before = result.objective_trace[step - 1 - cfg.convergence_window];
      const double change = std::abs(current.value - before);
      if (change <= cfg.convergence_tolerance * std::max(std::abs(before), 1e-300)) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gibbs sampling
// ---------------------------------------------------------------------------

std::size_t GibbsConfig::retained() const {
  if (thinning == 0 || n_samples <= burn_in) return 0;
  return (n_samples - burn_in) / thinning;
}

void GibbsConfig::validate() const {
  if (n_samples < 1) throw Error(ErrorKind::kConfig, "n_samples must be >= 1");
  if (thinning < 1) throw Error(ErrorKind::kConfig, "thinning must be >= 1");
  if (retained() < 1) {
    throw Error(ErrorKind::kConfig, "no samples remain after burn-in and thinning");
  }
}

namespace {

void sample_dirichlet(std::span<const double> concentration, std::span<double> out,
                      std::mt19937_64& rng) {
  double total = 0.0;
  for (std::size_t k = 0; k < concentration.size(); ++k) {
    std::gamma_distribution<double> gamma(concentration[k], 1.0);
    out[k] = gamma(rng);
    total += out[k];
  }
  if (total > 0.0) {
    for (double& v : out) v /= total;
    return;
  }
  // Every draw underflowed; put the mass on the largest concentration.
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<std::size_t>(std::max_element(concentration.begin(), concentration.end()) -
                               concentration.begin())] = 1.0;
}

std::size_t sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  return probs.size() - 1;
}

}  // namespace

std::vector<double> PosteriorSamples::mean_prevalence() const {
  std::vector<double> mean(prevalence_samples.cols(), 0.0);
  for (std::size_t s = 0; s < size(); ++s) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += prevalence_samples(s, k);
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(size(), 1));
  return mean;
}

ConfusionTensor PosteriorSamples::mean_confusion() const {
  if (confusion_samples.empty()) return {};
  ConfusionTensor mean(confusion_samples.front().n_annotators(),
                       confusion_samples.front().n_categories());
  for (const auto& sample : confusion_samples) {
    for (std::size_t n = 0; n < sample.values().size(); ++n) mean.values()[n] += sample.values()[n];
  }
  for (double& v : mean.values()) v /= static_cast<double>(confusion_samples.size());
  return mean;
}

PosteriorSamples sample_gibbs(const SparseAnnotationSet& data, const PriorSpec& priors,
                              const GibbsConfig& cfg) {
  cfg.validate();
  priors.validate();
  const std::size_t k_count = data.n_categories();
  const std::size_t j_count = data.n_annotators();
  const std::size_t n_items = data.n_items();
  if (priors.n_categories() != k_count) throw Error(ErrorKind::kShape, "prior K does not match data");

  std::mt19937_64 rng(cfg.seed);

  // Start from the prior means.
  ProbabilityParams state;
  state.prevalence = priors.alpha;
  const double alpha_total = std::accumulate(priors.alpha.begin(), priors.alpha.end(), 0.0);
  for (double& v : state.prevalence) v /= alpha_total;
  state.confusion = ConfusionTensor(j_count, k_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto beta_row = priors.beta.row(k);
      const double total = std::accumulate(beta_row.begin(), beta_row.end(), 0.0);
      for (std::size_t l = 0; l < k_count; ++l) state.confusion(j, k, l) = beta_row[l] / total;
    }
  }

  PosteriorSamples out;
  out.n_items = n_items;
  const std::size_t retained = cfg.retained();
  out.prevalence_samples = Matrix(retained, k_count);
  out.confusion_samples.reserve(retained);
  if (cfg.record_labels) out.label_samples.reserve(retained * n_items);

  std::vector<std::uint32_t> labels(n_items, 0);
  std::vector<double> scores(k_count);
  std::vector<double> class_counts(k_count);
  std::vector<double> emission_counts(j_count * k_count * k_count);
  std::vector<double> concentration(k_count);

  std::size_t kept = 0;
  for (std::size_t sweep = 1; sweep <= cfg.n_samples; ++sweep) {
    // (a) true labels given pi, theta
    std::vector<double> log_pi(k_count);
    std::transform(state.prevalence.begin(), state.prevalence.end(), log_pi.begin(),
                   [](double p) { return std::log(p); });
    std::fill(class_counts.begin(), class_counts.end(), 0.0);
    std::fill(emission_counts.begin(), emission_counts.end(), 0.0);
    for (std::size_t i = 0; i < n_items; ++i) {
      std::copy(log_pi.begin(), log_pi.end(), scores.begin());
      const auto annotations = data.item_annotations(i);
      for (const auto& a : annotations) {
        for (std::size_t k = 0; k < k_count; ++k) {
          scores[k] += std::log(state.confusion(a.annotator, k, a.label));
        }
      }
      const double norm = log_sum_exp(scores);
      for (double& s : scores) s = std::exp(s - norm);
      const std::size_t z = sample_categorical(scores, rng);
      labels[i] = static_cast<std::uint32_t>(z);
      class_counts[z] += 1.0;
      for (const auto& a : annotations) {
        emission_counts[(a.annotator * k_count + z) * k_count + a.label] += 1.0;
      }
    }
    // (b) prevalence given labels
    for (std::size_t k = 0; k < k_count; ++k) concentration[k] = priors.alpha[k] + class_counts[k];
    sample_dirichlet(concentration, state.prevalence, rng);
    // (c) confusion rows given labels
    for (std::size_t j = 0; j < j_count; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t l = 0; l < k_count; ++l) {
          concentration[l] = priors.beta(k, l) + emission_counts[(j * k_count + k) * k_count + l];
        }
        sample_dirichlet(concentration, state.confusion.row(j, k), rng);
      }
    }

    if (sweep > cfg.burn_in && (sweep - cfg.burn_in) % cfg.thinning == 0 && kept < retained) {
      std::copy(state.prevalence.begin(), state.prevalence.end(),
                out.prevalence_samples.row(kept).begin());
      out.confusion_samples.push_back(state.confusion);
      if (cfg.record_labels) out.label_samples.insert(out.label_samples.end(), labels.begin(), labels.end());
      ++kept;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// EM reference
// ---------------------------------------------------------------------------

namespace {

double em_log_likelihood(const ProbabilityParams& params, const SparseAnnotationSet& data,
                         Matrix& posterior) {
  const auto lp = detail::LogParams::from_probabilities(params);
  posterior = Matrix(data.n_items(), data.n_categories());
  std::vector<double> scores(data.n_categories());
  double total = 0.0;
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    detail::item_log_scores(lp, data, i, scores);
    const double norm = log_sum_exp(scores);
    if (!std::isfinite(norm)) {
      throw Error(ErrorKind::kNumeric, "EM assigned zero likelihood to item " + std::to_string(i));
    }
    total += norm;
    auto row = posterior.row(i);
    for (std::size_t k = 0; k < scores.size(); ++k) row[k] = std::exp(scores[k] - norm);
  }
  return total;
}

ProbabilityParams em_maximize(const SparseAnnotationSet& data, const Matrix& posterior,
                              std::vector<std::string>& warnings) {
  const std::size_t k_count = data.n_categories();
  const std::size_t j_count = data.n_annotators();
  ProbabilityParams params;
  params.prevalence.assign(k_count, 0.0);
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    for (std::size_t k = 0; k < k_count; ++k) params.prevalence[k] += posterior(i, k);
  }
  const double n = static_cast<double>(data.n_items());
  for (double& v : params.prevalence) v = n > 0 ? v / n : 1.0 / static_cast<double>(k_count);

  params.confusion = ConfusionTensor(j_count, k_count);
  for (const auto& a : data.triples()) {
    for (std::size_t k = 0; k < k_count; ++k) params.confusion(a.annotator, k, a.label) += posterior(a.item, k);
  }
  for (std::size_t j = 0; j < j_count; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      auto row = params.confusion.row(j, k);
      const double total = std::accumulate(row.begin(), row.end(), 0.0);
      if (total > 0.0) {
        for (double& v : row) v /= total;
      } else {
        std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(k_count));
        warnings.push_back("annotator " + std::to_string(j) + " has no expected counts for class " +
                           std::to_string(k) + "; using a uniform row");
      }
    }
  }
  return params;
}

}  // namespace

EmResult em_reference(const SparseAnnotationSet& data, const EmConfig& cfg) {
  const auto idle = data.idle_annotators();
  if (!idle.empty()) {
    throw Error(ErrorKind::kValidation,
                "EM requires every annotator to annotate; annotator " + std::to_string(idle.front()) +
                    " has no annotations");
  }
  const std::size_t k_count = data.n_categories();

  // Soft majority vote as the initial posterior.
  Matrix posterior(data.n_items(), k_count, 0.0);
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    const auto annotations = data.item_annotations(i);
    auto row = posterior.row(i);
    if (annotations.empty()) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(k_count));
      continue;
    }
    for (const auto& a : annotations) row[a.label] += 1.0;
    for (double& v : row) v /= static_cast<double>(annotations.size());
  }

  EmResult result;
  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    std::vector<std::string> warnings;
    result.params = em_maximize(data, posterior, warnings);
    const double ll = em_log_likelihood(result.params, data, posterior);
    result.log_likelihood_trace.push_back(ll);
    result.iterations = iter;
    result.warnings = std::move(warnings);
    if (iter > 1) {
      const double previous = result.log_likelihood_trace[iter - 2];
      if (ll - previous <= cfg.tolerance * std::max(std::abs(previous), 1.0)) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace dsbayes
