#include "doctest.h"
#include "dsbayes/error.hpp"
#include "dsbayes/synth.hpp"
#include "support.hpp"

using namespace dsbayes;
using namespace dsbayes::testing;

TEST_CASE("generation is deterministic and covers every item") {
  const auto spec = make_symmetric_spec(400, {0.3, 0.7}, std::vector<double>(5, 0.75), 0.3, 4);
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.data.triples().size() == b.data.triples().size());
  CHECK(std::equal(a.data.triples().begin(), a.data.triples().end(), b.data.triples().begin()));
  CHECK(a.true_labels == b.true_labels);
  CHECK(a.data.unannotated_items().empty());
  CHECK(a.warnings.empty());
  // About 0.3 * 5 labels per item, plus the redraws of empty masks.
  const double per_item = static_cast<double>(a.data.size()) / 400.0;
  CHECK(per_item > 1.4);
  CHECK(per_item < 2.0);
}

TEST_CASE("sparse coverage warns") {
  const auto spec = make_symmetric_spec(50, {0.5, 0.5}, std::vector<double>(3, 0.8), 0.2, 1);
  CHECK_FALSE(generate(spec).warnings.empty());
}

TEST_CASE("tasks share one coverage mask") {
  const auto spec = make_symmetric_spec(100, {0.5, 0.5}, std::vector<double>(4, 0.8), 0.5, 6);
  const auto tasks = generate_tasks(spec, 3);
  REQUIRE(tasks.size() == 3);
  for (const auto& t : tasks) {
    REQUIRE(t.data.size() == tasks[0].data.size());
    for (std::size_t n = 0; n < t.data.size(); ++n) {
      CHECK(t.data.triples()[n].item == tasks[0].data.triples()[n].item);
      CHECK(t.data.triples()[n].annotator == tasks[0].data.triples()[n].annotator);
    }
  }
  CHECK(tasks[0].true_labels != tasks[1].true_labels);
}

TEST_CASE("spec validation") {
  auto spec = make_symmetric_spec(10, {0.5, 0.5}, std::vector<double>(2, 0.8), 1.0, 0);
  spec.true_prevalence = {0.5, 0.6};
  CHECK_THROWS_AS(generate(spec), Error);
  spec = make_symmetric_spec(10, {0.5, 0.5}, std::vector<double>(2, 0.8), 1.0, 0);
  spec.coverage = 0.0;
  CHECK_THROWS_AS(generate(spec), Error);
  CHECK_THROWS_AS(make_symmetric_spec(10, {0.5, 0.5}, std::vector<double>(2, 1.2), 1.0, 0), Error);
}

TEST_CASE("brute force posterior agrees with enumeration and refuses large inputs") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(rng, 5, 3, 3);
    const auto p = random_probabilities(rng, inst.j, inst.k);
    const auto got = brute_force_posterior(p.prevalence, p.confusion, inst.data);
    const auto expected = enumerated_posterior(p, inst.data);
    for (std::size_t i = 0; i < got.values().size(); ++i) CHECK(std::abs(got.values()[i] - expected.values()[i]) < 1e-12);
  }
  const auto big = make_symmetric_spec(1001, {0.5, 0.5}, std::vector<double>(2, 0.8), 1.0, 0);
  const auto ds = generate(big);
  CHECK_THROWS_AS(brute_force_posterior(big.true_prevalence, big.true_confusion, ds.data), Error);
}

TEST_CASE("recovery error of the true parameters") {
  const auto spec = make_symmetric_spec(2000, {0.7, 0.3}, std::vector<double>(6, 0.85), 0.8, 3);
  const auto ds = generate(spec);
  const auto err = recovery_error(ProbabilityParams{spec.true_prevalence, spec.true_confusion}, spec, ds);
  CHECK(err.prevalence_max_abs_err == 0.0);
  CHECK(err.confusion_max_abs_err == 0.0);
  CHECK(err.label_accuracy > 0.9);
}
