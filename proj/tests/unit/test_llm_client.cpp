#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dsbayes/corpus.hpp"
#include "dsbayes/error.hpp"
#include "dsbayes/llm_client.hpp"
#include "fake_endpoint.hpp"
#include "support.hpp"

using namespace dsbayes;
using namespace dsbayes::testing;

namespace {

const std::string kSecret = "sk-test-4f1c9a7e2b";

ModelEndpointConfig fake_config() {
  ModelEndpointConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
  cfg.model = "fake-model";
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.max_retries = 2;
  cfg.max_concurrent = 3;
  cfg.credential_env = "DSBAYES_TEST_KEY";
  return cfg;
}

std::vector<CorpusItem> items(std::initializer_list<const char*> ids) {
  std::vector<CorpusItem> out;
  for (const char* id : ids) out.push_back({id, std::string("text of ") + id});
  return out;
}

std::map<std::string, ResponseRecord> by_item(const std::filesystem::path& path) {
  std::map<std::string, ResponseRecord> out;
  for (auto& r : load_response_records(path)) out.emplace(r.item_id, r);
  return out;
}

}  // namespace

TEST_CASE("prompt wraps the item text") {
  const auto plain = build_prompt("Hold the door.", PromptTemplate::kPlain);
  CHECK(plain.rfind("You are an expert in moral psychology", 0) == 0);
  CHECK(plain.find("\"care/harm\": [true / false]") != std::string::npos);
  CHECK(plain.find("Text: \"Hold the door.\"") != std::string::npos);
  const auto reasoning = build_prompt("Hold the door.", "reasoning");
  CHECK(reasoning.find("\"reasoning\"") != std::string::npos);
  CHECK(reasoning.find("step-by-step") != std::string::npos);
  CHECK_THROWS_AS(build_prompt("", PromptTemplate::kPlain), Error);
  CHECK_THROWS_AS(parse_prompt_template("fancy"), Error);
}

TEST_CASE("request body carries model, temperature and extra fields") {
  auto cfg = fake_config();
  cfg.extra_body = R"({"max_tokens": 64})";
  const auto body = nlohmann::json::parse(build_request_body(cfg, "hello"));
  CHECK(body["model"] == "fake-model");
  CHECK(body["temperature"].get<double>() == doctest::Approx(0.3));
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello");
  CHECK(body["max_tokens"] == 64);
  cfg.extra_body = "[1]";
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("scripted job: success, retry, refusal and malformed replies") {
  setenv("DSBAYES_TEST_KEY", kSecret.c_str(), 1);
  const auto dir = scratch_dir("llm");
  ScriptedEndpoint endpoint;
  endpoint.script("text of ok", {{200, labels_reply(true, false, false, false, true), ""}});
  endpoint.script("text of flaky", {{503, "busy", ""}, {429, "slow down", ""},
                                    {200, labels_reply(false, true, false, false, false), ""}});
  endpoint.script("text of refuse", {{200, chat_envelope("I'm sorry, I can't classify this."), ""}});
  endpoint.script("text of broken", {{200, "{\"choices\": [", ""}});
  endpoint.script("text of down", {{0, "", "connection refused"}});
  endpoint.script("text of echo", {{200, chat_envelope("key was " + kSecret), ""}});
  ScriptedTransport transport(endpoint);

  AnnotationJob job;
  job.items = items({"ok", "flaky", "refuse", "broken", "down", "echo"});
  job.output = dir / "responses.jsonl";
  std::ostringstream log;
  const auto summary = run_job(job, fake_config(), transport, &log);

  CHECK(summary.attempted == 6);
  CHECK(summary.succeeded == 2);
  CHECK(summary.failed == 4);
  CHECK(endpoint.requests_for("text of flaky") == 3);
  CHECK(endpoint.requests_for("text of down") == 3);
  CHECK(endpoint.requests_for("text of ok") == 1);

  auto records = by_item(job.output);
  REQUIRE(records.size() == 6);
  CHECK(records["ok"].labels.has_value());
  CHECK(records["ok"].attempt_count == 1);
  CHECK(records["flaky"].labels.has_value());
  CHECK(records["flaky"].attempt_count == 3);
  CHECK(records["refuse"].error->rfind("refusal", 0) == 0);
  CHECK(records["refuse"].raw_text == "I'm sorry, I can't classify this.");
  CHECK(records["broken"].error->rfind("malformed reply", 0) == 0);
  CHECK(records["down"].error->rfind("retries exhausted", 0) == 0);
  CHECK(records["echo"].error.has_value());

  const std::string contents = read_file(job.output);
  CHECK(contents.find(kSecret) == std::string::npos);
  CHECK(log.str().find(kSecret) == std::string::npos);
  CHECK(records["echo"].raw_text.find("[redacted]") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resume skips finished items and never duplicates records") {
  const auto dir = scratch_dir("resume");
  ScriptedEndpoint endpoint;
  endpoint.script("text of", {{200, labels_reply(true, true, false, false, false), ""}});
  ScriptedTransport transport(endpoint);
  AnnotationJob job;
  job.output = dir / "responses.jsonl";
  job.items = items({"a", "b"});
  run_job(job, fake_config(), transport);
  CHECK(endpoint.requests() == 2);

  job.items = items({"a", "b", "c", "d", "c"});
  job.resume = true;
  const auto summary = run_job(job, fake_config(), transport);
  CHECK(summary.skipped == 3);
  CHECK(summary.attempted == 2);
  CHECK(endpoint.requests() == 4);

  const auto all = load_response_records(job.output);
  CHECK(all.size() == 4);
  std::set<std::string> ids;
  for (const auto& r : all) ids.insert(r.item_id);
  CHECK(ids.size() == 4);

  // A different run over the same file queries everything again.
  job.run_id = "run-1";
  CHECK(run_job(job, fake_config(), transport).attempted == 4);
  CHECK(load_response_records(job.output).size() == 8);

  // Without resume the file is rewritten.
  job.resume = false;
  job.items = items({"z"});
  run_job(job, fake_config(), transport);
  CHECK(load_response_records(job.output).size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("authentication failures abort the job") {
  const auto dir = scratch_dir("auth");
  ScriptedEndpoint endpoint;
  endpoint.script("text of", {{401, "{\"error\": \"bad key\"}", ""}});
  ScriptedTransport transport(endpoint);
  AnnotationJob job;
  job.output = dir / "responses.jsonl";
  job.items = items({"a", "b", "c", "d", "e", "f", "g"});
  try {
    run_job(job, fake_config(), transport);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kAuthentication);
    CHECK(e.error_class() == ErrorClass::kNetwork);
  }
  CHECK(endpoint.requests() <= 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("an empty job writes an empty, valid file") {
  const auto dir = scratch_dir("empty");
  ScriptedEndpoint endpoint;
  ScriptedTransport transport(endpoint);
  AnnotationJob job;
  job.output = dir / "responses.jsonl";
  const auto summary = run_job(job, fake_config(), transport);
  CHECK(summary.attempted == 0);
  CHECK(std::filesystem::exists(job.output));
  CHECK(load_response_records(job.output).empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("a missing credential variable is a configuration error") {
  unsetenv("DSBAYES_TEST_MISSING");
  auto cfg = fake_config();
  cfg.credential_env = "DSBAYES_TEST_MISSING";
  AnnotationJob job;
  job.items = items({"a"});
  job.output = std::filesystem::temp_directory_path() / "dsbayes_never_written.jsonl";
  try {
    run_job(job, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
}
