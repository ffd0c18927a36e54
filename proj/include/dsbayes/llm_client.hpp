#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dsbayes/corpus.hpp"

namespace dsbayes {

enum class PromptTemplate { kPlain, kReasoning };

PromptTemplate parse_prompt_template(std::string_view id);
std::string_view prompt_template_name(PromptTemplate t);

/// The moral-foundations classification prompt followed by the target text.
std::string build_prompt(std::string_view text, PromptTemplate prompt_template);
std::string build_prompt(std::string_view text, std::string_view template_id);

/// Chat-completion endpoint settings. The credential itself is never stored:
/// only the name of the environment variable holding it.
struct ModelEndpointConfig {
  std::string endpoint_url;
  std::string model;
  double temperature = 0.30;
  std::size_t max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_concurrent = 4;
  std::string credential_env;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  /// JSON pointer to the reply text inside the response body.
  std::string response_pointer = "/choices/0/message/content";
  /// Extra top-level request fields as a JSON object, e.g. {"max_tokens": 512}.
  std::string extra_body = "{}";
  std::chrono::milliseconds backoff_initial{500};
  double backoff_factor = 2.0;

  void validate() const;
};

/// Request body: {"model", "temperature", "messages": [{"role": "user", "content": prompt}], ...extra}.
std::string build_request_body(const ModelEndpointConfig& cfg, const std::string& prompt);

struct TransportReply {
  /// HTTP status; 0 when no response arrived (connection failure, timeout).
  int status = 0;
  std::string body;
  std::string error;
};

/// Sends one request body to the endpoint. Implementations must allow
/// concurrent calls.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportReply post(const std::string& body) = 0;
};

/// HTTP(S) transport over the configured endpoint URL.
std::unique_ptr<ChatTransport> make_http_transport(const ModelEndpointConfig& cfg,
                                                   std::string credential);

struct AnnotationJob {
  std::vector<CorpusItem> items;
  PromptTemplate prompt_template = PromptTemplate::kPlain;
  std::filesystem::path output;
  bool resume = false;
  std::string run_id = "run-0";
};

struct JobSummary {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  /// One line per failed attempt.
  std::vector<std::string> attempt_log;
};

/// Queries the endpoint once per item and appends one record per item to
/// job.output, flushed as it completes. Transient failures (no reply, 429,
/// 5xx) are retried with exponential backoff; refusals, malformed replies and
/// exhausted retries become error records. An authentication failure (401,
/// 403) aborts the job with a network-class error.
JobSummary run_job(const AnnotationJob& job, const ModelEndpointConfig& cfg, ChatTransport& transport,
                   std::ostream* log = nullptr);
/// Same, reading the credential from cfg.credential_env and using HTTP.
JobSummary run_job(const AnnotationJob& job, const ModelEndpointConfig& cfg,
                   std::ostream* log = nullptr);

}  // namespace dsbayes
