#include "doctest.h"
#include "dsbayes/corpus.hpp"
#include "dsbayes/documents.hpp"
#include "dsbayes/error.hpp"
#include "dsbayes/manifest.hpp"
#include "dsbayes/synth.hpp"
#include "support.hpp"

using namespace dsbayes;
using namespace dsbayes::testing;

TEST_CASE("fit documents round trip byte for byte") {
  const auto spec = make_symmetric_spec(80, {0.6, 0.4}, std::vector<double>(3, 0.8), 0.9, 2);
  const auto ds = generate(spec);
  FitConfig cfg;
  cfg.max_steps = 50;
  const auto fit = fit_map(ds.data, PriorSpec::defaults(2), cfg);
  const auto doc = make_fit_document(fit, "care", 80, {"a", "b", "m"},
                                     {AnnotatorKind::kHuman, AnnotatorKind::kHuman, AnnotatorKind::kModel});
  const auto text = doc.to_json();
  const auto back = FitDocument::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.annotator_kinds[2] == AnnotatorKind::kModel);
  CHECK(back.params.prevalence == normalize(fit.params).prevalence);
  CHECK(back.objective_trace == fit.objective_trace);
  CHECK(text.rfind("{\n  \"schema_version\": 1", 0) == 0);

  CHECK_THROWS_AS(FitDocument::from_json("{\"schema_version\": 99}"), Error);
  CHECK_THROWS_AS(FitDocument::from_json("not json"), Error);
}

TEST_CASE("synthetic specs round trip") {
  const auto spec = make_symmetric_spec(10, {0.2, 0.3, 0.5}, std::vector<double>{0.9, 0.7}, 0.5, 77);
  const auto back = synth_spec_from_json(synth_spec_to_json(spec));
  CHECK(back.n_items == 10);
  CHECK(back.seed == 77);
  CHECK(back.true_prevalence == spec.true_prevalence);
  CHECK(back.true_confusion == spec.true_confusion);
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifests are written without overwriting") {
  const auto dir = scratch_dir("manifest");
  write_file(dir / "input.csv", "abc");
  RunManifest m;
  m.command = "fit";
  m.argv = {"fit", "--input", (dir / "input.csv").string()};
  m.config_json = R"({"--seed":"3"})";
  m.seed = 3;
  m.started_at = utc_timestamp();
  m.finished_at = m.started_at;
  m.add_input(dir / "input.csv");
  const auto first = write_manifest(m, dir);
  const auto second = write_manifest(m, dir);
  CHECK(first != second);
  const auto back = RunManifest::from_json(read_file(first));
  CHECK(back.argv == m.argv);
  CHECK(back.seed == std::optional<std::uint64_t>(3));
  REQUIRE(back.inputs.size() == 1);
  CHECK(back.inputs[0].sha256 == sha256_hex("abc"));
  std::filesystem::remove_all(dir);
}
