#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "dsbayes/error.hpp"
#include "dsbayes/metrics.hpp"
#include "support.hpp"

using namespace dsbayes;
using namespace dsbayes::testing;

namespace {

Matrix binary(double fpr, double fnr) {
  Matrix m(2, 2);
  m(0, 0) = 1.0 - fpr;
  m(0, 1) = fpr;
  m(1, 0) = fnr;
  m(1, 1) = 1.0 - fnr;
  return m;
}

// Agreement over every unordered pair of annotations sharing an item.
double pairwise_pabak(const SparseAnnotationSet& s) {
  double agree = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.n_items(); ++i) {
    const auto a = s.item_annotations(i);
    for (std::size_t x = 0; x < a.size(); ++x) {
      for (std::size_t y = x + 1; y < a.size(); ++y) {
        pairs += 1.0;
        agree += a[x].label == a[y].label ? 1.0 : 0.0;
      }
    }
  }
  return 2.0 * agree / pairs - 1.0;
}

}  // namespace

TEST_CASE("metric identities hold exactly") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = binary(uniform(rng), uniform(rng));
    const auto pi = random_simplex(rng, 2);
    const auto r = binary_metrics(m, pi);
    CHECK(r.recall == 1.0 - r.fnr);
    CHECK(r.balanced_accuracy == 1.0 - (r.fpr + r.fnr) / 2.0);
    CHECK(r.fnr == m(1, 0));
    CHECK(r.fpr == m(0, 1));
    REQUIRE(r.precision.has_value());
    const double n = 1000.0;
    const double tp = n * pi[1] * m(1, 1);
    const double fp = n * pi[0] * m(0, 1);
    CHECK(std::abs(*r.precision - tp / (tp + fp)) < 1e-12);
  }
}

TEST_CASE("precision is absent without prevalence or positive predictions") {
  CHECK_FALSE(binary_metrics(binary(0.1, 0.2), {}).precision.has_value());
  const std::vector<double> pi{0.5, 0.5};
  CHECK_FALSE(binary_metrics(binary(0.0, 1.0), pi).precision.has_value());
}

TEST_CASE("binary metrics refuse other arities") {
  try {
    binary_metrics(Matrix(3, 3), {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnsupportedArity);
  }
}

TEST_CASE("percentile rank uses midranks") {
  const std::vector<double> pool{0.5, 0.6, 0.7, 0.7};
  CHECK(percentile_rank(0.8, pool) == 100.0);
  CHECK(percentile_rank(0.1, pool) == 0.0);
  CHECK(percentile_rank(0.7, pool) == 75.0);
  CHECK(percentile_rank(0.6, pool) == 37.5);
  CHECK_THROWS_AS(percentile_rank(0.5, std::vector<double>{}), Error);

  Rng rng(2);
  std::vector<double> big(40);
  for (auto& v : big) v = uniform(rng);
  double last = -1.0;
  for (double x = 0.0; x <= 1.0; x += 0.01) {
    const double p = percentile_rank(x, big);
    CHECK(p >= last);
    last = p;
  }
}

TEST_CASE("pabak fixtures") {
  const SparseAnnotationSet perfect(3, 3, 2, {{0, 0, 1}, {0, 1, 1}, {0, 2, 1}, {1, 0, 0}, {1, 2, 0}, {2, 1, 1}});
  CHECK(pabak(perfect) == 1.0);
  // Pairs: item 0 agrees, item 1 agrees, item 2 disagrees.
  const SparseAnnotationSet hand(3, 2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 0}, {1, 1, 0}, {2, 0, 1}, {2, 1, 0}});
  CHECK(std::abs(*pabak(hand) - 1.0 / 3.0) < 1e-12);
  const SparseAnnotationSet lonely(2, 2, 2, {{0, 0, 1}, {1, 1, 0}});
  CHECK_FALSE(pabak(lonely).has_value());
}

TEST_CASE("pabak matches pair enumeration and is symmetric") {
  Rng rng(90);
  const std::vector<std::size_t> swap{1, 0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_annotations(rng, uniform_index(rng, 2, 30), uniform_index(rng, 2, 6), 2, 0.7);
    const auto value = pabak(s);
    if (!value) continue;
    CHECK(std::abs(*value - pairwise_pabak(s)) < 1e-12);
    CHECK(pabak(s.permuted_labels(swap)) == value);

    // Renumbering annotators does not change within-item pairs.
    std::vector<Annotation> renumbered(s.triples().begin(), s.triples().end());
    for (auto& a : renumbered) a.annotator = s.n_annotators() - 1 - a.annotator;
    CHECK(pabak(SparseAnnotationSet(s.n_items(), s.n_annotators(), 2, renumbered)) == value);
  }
}

TEST_CASE("evaluate_annotator ranks against the human pool") {
  ProbabilityParams p{{0.6, 0.4}, ConfusionTensor(4, 2)};
  const double fnr[] = {0.3, 0.2, 0.25, 0.05};
  for (std::size_t j = 0; j < 4; ++j) {
    p.confusion(j, 0, 0) = 0.9;
    p.confusion(j, 0, 1) = 0.1;
    p.confusion(j, 1, 0) = fnr[j];
    p.confusion(j, 1, 1) = 1.0 - fnr[j];
  }
  const std::vector<std::size_t> humans{0, 1, 2};
  const auto model = evaluate_annotator(p, 3, humans);
  CHECK(model.percentile == 100.0);
  CHECK(evaluate_annotator(p, 1, humans).percentile == doctest::Approx(100.0 * 2.5 / 3.0));
  CHECK_FALSE(evaluate_annotator(p, 3, {}).percentile.has_value());
  CHECK_THROWS_AS(evaluate_annotator(p, 7, humans), Error);
}

TEST_CASE("reports and tables") {
  ProbabilityParams p{{0.7, 0.3}, ConfusionTensor(3, 2)};
  for (std::size_t j = 0; j < 3; ++j) {
    p.confusion(j, 0, 0) = 0.8 + 0.05 * j;
    p.confusion(j, 0, 1) = 0.2 - 0.05 * j;
    p.confusion(j, 1, 0) = 0.3 - 0.1 * j;
    p.confusion(j, 1, 1) = 0.7 + 0.1 * j;
  }
  const std::vector<std::string> names{"h1", "h2", "gpt"};
  const std::vector<AnnotatorKind> kinds{AnnotatorKind::kHuman, AnnotatorKind::kHuman, AnnotatorKind::kModel};
  const auto report = build_report(p, names, kinds, "Care", "MFTC");
  REQUIRE(report.annotators.size() == 3);
  CHECK(report.annotators[2].percentile == 100.0);
  CHECK_FALSE(report.annotators[0].percentile.has_value());
  REQUIRE(report.human_average.has_value());
  CHECK(report.human_average->fnr == doctest::Approx(0.25));

  const std::vector<MetricsReport> reports{report};
  const auto acc = accuracy_table_csv(reports);
  CHECK(acc.find("gpt") != std::string::npos);
  CHECK(acc.find("Care") != std::string::npos);
  const auto err = error_rate_table_csv(reports);
  CHECK(err.find("Human Baseline") != std::string::npos);
  CHECK(report_to_json(report).find("\"balanced_accuracy\"") != std::string::npos);

  const std::vector<std::string> short_names{"h1"};
  CHECK_THROWS_AS(build_report(p, short_names, kinds, "Care", "MFTC"), Error);
}
