#include <numeric>

#include "doctest.h"
#include "dsbayes/error.hpp"
#include "dsbayes/model.hpp"
#include "support.hpp"

using namespace dsbayes;
using namespace dsbayes::testing;

TEST_CASE("annotation set validates and indexes triples") {
  SparseAnnotationSet s(3, 2, 2, {{2, 1, 0}, {0, 0, 1}, {0, 1, 1}});
  CHECK(s.size() == 3);
  CHECK(s.item_annotations(0).size() == 2);
  CHECK(s.item_annotations(1).empty());
  CHECK(s.item_annotations(2).front().annotator == 1);
  CHECK(s.unannotated_items() == std::vector<std::size_t>{1});
  CHECK(s.annotator_counts() == std::vector<std::size_t>{1, 2});

  auto kind_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  CHECK(kind_of([] { SparseAnnotationSet(2, 2, 2, {{2, 0, 0}}); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { SparseAnnotationSet(2, 2, 2, {{0, 0, 2}}); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { SparseAnnotationSet(2, 2, 2, {{0, 0, 1}, {0, 0, 0}}); }) == ErrorKind::kValidation);
}

TEST_CASE("log dirichlet density includes the normalizer") {
  const std::vector<double> log_half{std::log(0.5), std::log(0.5)};
  const std::vector<double> ones{1.0, 1.0};
  const std::vector<double> twos{2.0, 2.0};
  CHECK(log_dirichlet_density(log_half, ones) == doctest::Approx(0.0));
  CHECK(log_dirichlet_density(log_half, twos) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("log_joint matches the direct oracle on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 12, 4, 4);
    const auto params = random_logits(rng, inst.j, inst.k);
    const auto priors = PriorSpec::defaults(inst.k);
    const double expected = oracle_log_joint(params, inst.data, priors);
    CHECK(log_joint(params, inst.data, priors) == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("posterior matches enumeration over joint label assignments") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng, 5, 3, 3);
    const auto probs = random_probabilities(rng, inst.j, inst.k);
    const auto expected = enumerated_posterior(probs, inst.data);
    const auto got = posterior_labels(to_logits(probs), inst.data);
    for (std::size_t i = 0; i < got.values().size(); ++i) {
      CHECK(std::abs(got.values()[i] - expected.values()[i]) < 1e-12);
    }
  }
}

TEST_CASE("log_joint is invariant under a consistent relabeling") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(rng, 20, 4, 4);
    const std::size_t k = inst.k;
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto params = random_logits(rng, inst.j, k);
    ModelParams permuted(inst.j, k);
    for (std::size_t c = 0; c < k; ++c) permuted.pi_logits[perm[c]] = params.pi_logits[c];
    for (std::size_t j = 0; j < inst.j; ++j) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t l = 0; l < k; ++l) permuted.theta(j, perm[c], perm[l]) = params.theta(j, c, l);
      }
    }
    const auto priors = PriorSpec::defaults(k);
    CHECK(log_joint(permuted, inst.data.permuted_labels(perm), priors) ==
          doctest::Approx(log_joint(params, inst.data, priors)).epsilon(1e-12));
  }
}

TEST_CASE("an annotator with identical confusion rows carries no information") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_instance(rng, 15, 3, 3);
    auto probs = random_probabilities(rng, inst.j + 1, inst.k);
    const auto shared = random_simplex(rng, inst.k);
    for (std::size_t c = 0; c < inst.k; ++c) {
      std::copy(shared.begin(), shared.end(), probs.confusion.row(inst.j, c).begin());
    }
    std::vector<Annotation> triples(inst.data.triples().begin(), inst.data.triples().end());
    std::vector<Annotation> extended = triples;
    for (std::size_t i = 0; i < inst.n; ++i) extended.push_back({i, inst.j, uniform_index(rng, 0, inst.k - 1)});
    const SparseAnnotationSet with(inst.n, inst.j + 1, inst.k, extended);
    const SparseAnnotationSet without(inst.n, inst.j + 1, inst.k, triples);
    const auto a = posterior_labels(probs, with);
    const auto b = posterior_labels(probs, without);
    for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("items without annotations fall back to the prevalence") {
  ProbabilityParams p{{0.25, 0.75}, ConfusionTensor::identity(1, 2)};
  for (auto& v : p.confusion.values()) v = v == 1.0 ? 0.9 : 0.1;
  const SparseAnnotationSet s(2, 1, 2, {{0, 0, 1}});
  const auto post = posterior_labels(p, s);
  CHECK(post(1, 0) == doctest::Approx(0.25));
  CHECK(post(1, 1) == doctest::Approx(0.75));
  CHECK(post(0, 1) == doctest::Approx(0.75 * 0.9 / (0.75 * 0.9 + 0.25 * 0.1)));
}

TEST_CASE("map_labels resolves ties toward the lowest category") {
  Matrix post(2, 3);
  post(0, 0) = 0.2;
  post(0, 1) = 0.4;
  post(0, 2) = 0.4;
  post(1, 2) = 1.0;
  CHECK(map_labels(post) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("normalize and to_logits round trip") {
  Rng rng(3);
  const auto probs = random_probabilities(rng, 3, 3);
  const auto back = normalize(to_logits(probs));
  for (std::size_t i = 0; i < probs.prevalence.size(); ++i) {
    CHECK(back.prevalence[i] == doctest::Approx(probs.prevalence[i]).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < probs.confusion.values().size(); ++i) {
    CHECK(back.confusion.values()[i] == doctest::Approx(probs.confusion.values()[i]).epsilon(1e-14));
  }
  auto zero = probs;
  zero.prevalence = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(to_logits(zero), Error);
}

TEST_CASE("non-finite or mis-shaped parameters are rejected") {
  const SparseAnnotationSet s(2, 2, 2, {{0, 0, 1}, {1, 1, 0}});
  const auto priors = PriorSpec::defaults(2);
  ModelParams p(2, 2);
  p.theta_logits[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(log_joint(p, s, priors), Error);
  ModelParams wrong(3, 2);
  CHECK_THROWS_AS(log_joint(wrong, s, priors), Error);
  CHECK_THROWS_AS(log_joint(ModelParams(2, 2), s, PriorSpec::defaults(3)), Error);
}

TEST_CASE("competence is the mean diagonal") {
  ConfusionTensor t(1, 2);
  t(0, 0, 0) = 0.9;
  t(0, 0, 1) = 0.1;
  t(0, 1, 0) = 0.3;
  t(0, 1, 1) = 0.7;
  CHECK(competence(t).front() == doctest::Approx(0.8));
}
