#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dsbayes/annotations.hpp"
#include "dsbayes/model.hpp"

namespace dsbayes::testing {

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Flat Dirichlet draw with every entry bounded away from zero.
inline std::vector<double> random_simplex(Rng& rng, std::size_t k, double floor = 1e-3) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = gamma(rng) + floor;
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

inline ProbabilityParams random_probabilities(Rng& rng, std::size_t j, std::size_t k) {
  ProbabilityParams p{random_simplex(rng, k), ConfusionTensor(j, k)};
  for (std::size_t a = 0; a < j; ++a) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = random_simplex(rng, k);
      std::copy(row.begin(), row.end(), p.confusion.row(a, c).begin());
    }
  }
  return p;
}

inline SparseAnnotationSet random_annotations(Rng& rng, std::size_t n, std::size_t j, std::size_t k,
                                       double coverage) {
  std::vector<Annotation> triples;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < j; ++a) {
      if (uniform(rng) < coverage) triples.push_back({i, a, uniform_index(rng, 0, k - 1)});
    }
  }
  return SparseAnnotationSet(n, j, k, std::move(triples));
}

inline ModelParams random_logits(Rng& rng, std::size_t j, std::size_t k, double scale = 1.5) {
  std::normal_distribution<double> normal(0.0, scale);
  ModelParams p(j, k);
  for (auto& v : p.pi_logits) v = normal(rng);
  for (auto& v : p.theta_logits) v = normal(rng);
  return p;
}

struct Instance {
  std::size_t n = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  SparseAnnotationSet data;
};

inline Instance random_instance(Rng& rng, std::size_t max_n, std::size_t max_j, std::size_t max_k) {
  Instance inst;
  inst.n = uniform_index(rng, 1, max_n);
  inst.j = uniform_index(rng, 1, max_j);
  inst.k = uniform_index(rng, 2, max_k);
  inst.data = random_annotations(rng, inst.n, inst.j, inst.k, uniform(rng, 0.2, 1.0));
  return inst;
}

// ---------------------------------------------------------------------------
// Oracles. These are written against the model definition directly and share
// no code with the library's log-space evaluation.
// ---------------------------------------------------------------------------

inline std::vector<double> softmax(const double* x, std::size_t k) {
  double m = x[0];
  for (std::size_t i = 1; i < k; ++i) m = std::max(m, x[i]);
  std::vector<double> p(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += p[i] = std::exp(x[i] - m);
  for (auto& v : p) v /= z;
  return p;
}

/// Posterior by enumerating every joint assignment of the true labels and
/// marginalizing. Only for very small N.
inline Matrix enumerated_posterior(const ProbabilityParams& p, const SparseAnnotationSet& data) {
  const std::size_t n = data.n_items();
  const std::size_t k = data.n_categories();
  Matrix marginal(n, k);
  std::vector<std::size_t> z(n, 0);
  double evidence = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= p.prevalence[z[i]];
    for (const auto& a : data.triples()) w *= p.confusion(a.annotator, z[a.item], a.label);
    evidence += w;
    for (std::size_t i = 0; i < n; ++i) marginal(i, z[i]) += w;
    std::size_t pos = 0;
    while (pos < n && ++z[pos] == k) z[pos++] = 0;
    if (pos == n) break;
  }
  for (auto& v : marginal.values()) v /= evidence;
  return marginal;
}

/// log p(Y | pi, theta) + log Dir(pi; alpha) + sum_j,k log Dir(theta_jk; beta_k),
/// from logits, in plain probability space for the likelihood factors.
inline double oracle_log_joint(const ModelParams& params, const SparseAnnotationSet& data,
                               const PriorSpec& priors) {
  const std::size_t k = params.n_categories;
  const auto pi = softmax(params.pi_logits.data(), k);
  std::vector<std::vector<double>> theta(params.n_annotators * k);
  for (std::size_t j = 0; j < params.n_annotators; ++j) {
    for (std::size_t c = 0; c < k; ++c) {
      theta[j * k + c] = softmax(params.theta_logits.data() + (j * k + c) * k, k);
    }
  }
  auto log_dir = [](const std::vector<double>& x, std::span<const double> a) {
    double sum_a = 0.0;
    double out = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum_a += a[i];
      out += (a[i] - 1.0) * std::log(x[i]) - std::lgamma(a[i]);
    }
    return out + std::lgamma(sum_a);
  };
  double total = log_dir(pi, priors.alpha);
  for (std::size_t j = 0; j < params.n_annotators; ++j) {
    for (std::size_t c = 0; c < k; ++c) total += log_dir(theta[j * k + c], priors.beta.row(c));
  }
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    // Per-class log products, then a guarded sum.
    std::vector<double> s(k);
    for (std::size_t c = 0; c < k; ++c) {
      s[c] = std::log(pi[c]);
      for (const auto& a : data.item_annotations(i)) s[c] += std::log(theta[a.annotator * k + c][a.label]);
    }
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - m);
    total += m + std::log(z);
  }
  return total;
}

/// Central finite differences of the oracle log joint.
inline ModelParams finite_difference_gradient(const ModelParams& params, const SparseAnnotationSet& data,
                                              const PriorSpec& priors, double h = 1e-5) {
  ModelParams grad(params.n_annotators, params.n_categories);
  ModelParams probe = params;
  auto diff = [&](double& slot, double& out) {
    const double saved = slot;
    slot = saved + h;
    const double up = oracle_log_joint(probe, data, priors);
    slot = saved - h;
    const double down = oracle_log_joint(probe, data, priors);
    slot = saved;
    out = (up - down) / (2.0 * h);
  };
  for (std::size_t i = 0; i < probe.pi_logits.size(); ++i) diff(probe.pi_logits[i], grad.pi_logits[i]);
  for (std::size_t i = 0; i < probe.theta_logits.size(); ++i) diff(probe.theta_logits[i], grad.theta_logits[i]);
  return grad;
}

/// Relative error with an absolute floor of one, so near-zero coordinates
/// are compared on an absolute scale.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dsbayes_test_" + name + "_" +
                                                       std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dsbayes::testing
