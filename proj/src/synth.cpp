#include "dsbayes/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsbayes/error.hpp"

namespace dsbayes {

namespace {

std::size_t draw(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_positive = k;
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  return last_positive;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_categories < 1) throw Error(ErrorKind::kConfig, "n_categories must be >= 1");
  if (n_annotators < 1) throw Error(ErrorKind::kConfig, "n_annotators must be >= 1");
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw Error(ErrorKind::kConfig, "coverage must lie in (0, 1]");
  }
  if (true_prevalence.size() != n_categories) {
    throw Error(ErrorKind::kShape, "true_prevalence must have K entries");
  }
  double total = 0.0;
  for (double p : true_prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::kConfig, "prevalence outside [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::kConfig, "prevalence must sum to 1");
  if (true_confusion.n_annotators() != n_annotators || true_confusion.n_categories() != n_categories) {
    throw Error(ErrorKind::kShape, "true_confusion must be J x K x K");
  }
  true_confusion.validate();
}

SynthSpec make_symmetric_spec(std::size_t n_items, std::vector<double> prevalence,
                              std::span<const double> diagonal, double coverage,
                              std::uint64_t seed) {
  SynthSpec spec;
  spec.n_items = n_items;
  spec.n_annotators = diagonal.size();
  spec.n_categories = prevalence.size();
  spec.true_prevalence = std::move(prevalence);
  spec.true_confusion = ConfusionTensor::symmetric(diagonal, spec.n_categories);
  spec.coverage = coverage;
  spec.seed = seed;
  spec.validate();
  return spec;
}

SynthDataset generate(const SynthSpec& spec) { return std::move(generate_tasks(spec, 1).front()); }

std::vector<SynthDataset> generate_tasks(const SynthSpec& spec, std::size_t n_tasks) {
  spec.validate();
  if (n_tasks < 1) throw Error(ErrorKind::kConfig, "n_tasks must be >= 1");
  std::vector<std::string> warnings;
  if (spec.coverage * static_cast<double>(spec.n_annotators) < 1.0) {
    warnings.push_back("expected annotations per item below 1; coverage masks are redrawn often");
  }
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution covered(spec.coverage);
  std::vector<std::vector<Annotation>> triples(n_tasks);
  std::vector<SynthDataset> out(n_tasks);
  for (auto& task : out) task.true_labels.resize(spec.n_items);
  std::vector<bool> mask(spec.n_annotators);
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    bool any = false;
    while (!any) {
      for (std::size_t j = 0; j < spec.n_annotators; ++j) {
        mask[j] = covered(rng);
        any = any || mask[j];
      }
    }
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const std::size_t z = draw(spec.true_prevalence, rng);
      out[t].true_labels[i] = z;
      for (std::size_t j = 0; j < spec.n_annotators; ++j) {
        if (mask[j]) triples[t].push_back({i, j, draw(spec.true_confusion.row(j, z), rng)});
      }
    }
  }
  for (std::size_t t = 0; t < n_tasks; ++t) {
    out[t].data = SparseAnnotationSet(spec.n_items, spec.n_annotators, spec.n_categories,
                                      std::move(triples[t]));
    out[t].warnings = warnings;
  }
  return out;
}

PosteriorMatrix brute_force_posterior(std::span<const double> prevalence,
                                      const ConfusionTensor& confusion,
                                      const SparseAnnotationSet& data) {
  const std::size_t k_count = data.n_categories();
  if (data.n_items() > 1000 || k_count > 5) {
    throw Error(ErrorKind::kConfig, "brute-force oracle is limited to N <= 1000 and K <= 5");
  }
  if (prevalence.size() != k_count || confusion.n_categories() != k_count ||
      confusion.n_annotators() != data.n_annotators()) {
    throw Error(ErrorKind::kShape, "oracle inputs do not match the data");
  }
  PosteriorMatrix out(data.n_items(), k_count);
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    double evidence = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      double joint = prevalence[k];
      for (const auto& a : data.triples()) {
        if (a.item == i) joint *= confusion(a.annotator, k, a.label);
      }
      out(i, k) = joint;
      evidence += joint;
    }
    for (std::size_t k = 0; k < k_count; ++k) out(i, k) /= evidence;
  }
  return out;
}

RecoveryError recovery_error(const ProbabilityParams& estimate, const SynthSpec& spec,
                             const SynthDataset& dataset) {
  if (estimate.prevalence.size() != spec.n_categories ||
      estimate.confusion.n_annotators() != spec.n_annotators ||
      estimate.confusion.n_categories() != spec.n_categories) {
    throw Error(ErrorKind::kShape, "estimate does not match the spec");
  }
  RecoveryError err;
  for (std::size_t k = 0; k < spec.n_categories; ++k) {
    err.prevalence_max_abs_err = std::max(
        err.prevalence_max_abs_err, std::abs(estimate.prevalence[k] - spec.true_prevalence[k]));
  }
  const auto est = estimate.confusion.values();
  const auto truth = spec.true_confusion.values();
  for (std::size_t n = 0; n < est.size(); ++n) {
    err.confusion_max_abs_err = std::max(err.confusion_max_abs_err, std::abs(est[n] - truth[n]));
  }
  const auto labels = map_labels(posterior_labels(estimate, dataset.data));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += labels[i] == dataset.true_labels[i];
  err.label_accuracy =
      labels.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  return err;
}

RecoveryError recovery_error(const FitResult& fit, const SynthSpec& spec,
                             const SynthDataset& dataset) {
  return recovery_error(normalize(fit.params), spec, dataset);
}

RecoveryError recovery_error(const FitResult& fit, const SynthSpec& spec) {
  return recovery_error(fit, spec, generate(spec));
}

}  // namespace dsbayes
