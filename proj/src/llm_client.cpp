#include "dsbayes/llm_client.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <thread>

#include "dsbayes/error.hpp"
#include "httplib.h"

namespace dsbayes {

namespace {

constexpr std::string_view kPromptIntro =
    "You are an expert in moral psychology, classifying text according to Haidt's theory.\n"
    "\n"
    "For each moral foundation, mark true if moral values from that foundation are expressed in "
    "the text, false if not expressed.\n"
    "\n"
    "Answer only with a valid JSON in this format:\n"
    "\n";

constexpr std::string_view kPlainFormat =
    "{\n"
    "    \"care/harm\": [true / false],\n"
    "    \"fairness/cheating\": [true / false], \n"
    "    \"loyalty/betrayal\": [true / false],\n"
    "    \"authority/subversion\": [true / false],\n"
    "    \"sanctity/degradation\": [true / false]\n"
    "}\n";

constexpr std::string_view kReasoningFormat =
    "{\n"
    "    \"care/harm\": [true / false],\n"
    "    \"fairness/cheating\": [true / false], \n"
    "    \"loyalty/betrayal\": [true / false],\n"
    "    \"authority/subversion\": [true / false],\n"
    "    \"sanctity/degradation\": [true / false],\n"
    "    \"reasoning\": [summary of reasoning],\n"
    "}\n"
    "Provide step-by-step reasoning.\n";

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
    text.replace(pos, secret.size(), "[redacted]");
  }
  return text;
}

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfig, "endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public ChatTransport {
 public:
  HttpTransport(const ModelEndpointConfig& cfg, std::string credential)
      : url_(split_url(cfg.endpoint_url)), cfg_(cfg), credential_(std::move(credential)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url_.origin.rfind("https://", 0) == 0) {
      throw Error(ErrorKind::kConfig, "this build has no TLS support for https endpoints");
    }
#endif
  }

  TransportReply post(const std::string& body) override {
    httplib::Client client(url_.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    if (!credential_.empty()) headers.emplace(cfg_.auth_header, cfg_.auth_prefix + credential_);
    auto result = client.Post(url_.path, headers, body, "application/json");
    TransportReply reply;
    if (!result) {
      reply.error = httplib::to_string(result.error());
      return reply;
    }
    reply.status = result->status;
    reply.body = result->body;
    return reply;
  }

 private:
  UrlParts url_;
  ModelEndpointConfig cfg_;
  std::string credential_;
};

bool is_transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& path, bool append) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out_) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  }

  void write(const ResponseRecord& record) {
    const std::string line = record.to_json_line() + "\n";
    std::lock_guard lock(mutex_);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw Error(ErrorKind::kIo, "failed to write response record");
  }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace

PromptTemplate parse_prompt_template(std::string_view id) {
  if (id == "plain") return PromptTemplate::kPlain;
  if (id == "reasoning") return PromptTemplate::kReasoning;
  throw Error(ErrorKind::kConfig, "unknown prompt template '" + std::string(id) + "'");
}

std::string_view prompt_template_name(PromptTemplate t) {
  return t == PromptTemplate::kPlain ? "plain" : "reasoning";
}

std::string build_prompt(std::string_view text, PromptTemplate prompt_template) {
  if (text.empty()) throw Error(ErrorKind::kConfig, "cannot build a prompt for empty text");
  std::string prompt(kPromptIntro);
  prompt += prompt_template == PromptTemplate::kPlain ? kPlainFormat : kReasoningFormat;
  prompt += "\nText: \"";
  prompt += text;
  prompt += "\"";
  return prompt;
}

std::string build_prompt(std::string_view text, std::string_view template_id) {
  return build_prompt(text, parse_prompt_template(template_id));
}

void ModelEndpointConfig::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorKind::kConfig, "temperature must be >= 0");
  if (max_concurrent < 1) throw Error(ErrorKind::kConfig, "max_concurrent must be >= 1");
  if (!(backoff_factor >= 1.0)) throw Error(ErrorKind::kConfig, "backoff_factor must be >= 1");
  try {
    if (!nlohmann::json::parse(extra_body).is_object()) {
      throw Error(ErrorKind::kConfig, "extra_body must be a JSON object");
    }
    (void)nlohmann::json::json_pointer(response_pointer);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("invalid endpoint setting: ") + e.what());
  }
}

std::string build_request_body(const ModelEndpointConfig& cfg, const std::string& prompt) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  const auto extra = nlohmann::ordered_json::parse(cfg.extra_body);
  for (const auto& [key, value] : extra.items()) body[key] = value;
  return body.dump();
}

std::unique_ptr<ChatTransport> make_http_transport(const ModelEndpointConfig& cfg,
                                                   std::string credential) {
  return std::make_unique<HttpTransport>(cfg, std::move(credential));
}

namespace {

struct ItemOutcome {
  ResponseRecord record;
  bool auth_failure = false;
};

ItemOutcome annotate_item(const CorpusItem& item, const AnnotationJob& job,
                          const ModelEndpointConfig& cfg, ChatTransport& transport,
                          const std::string& secret, const std::function<void(std::string)>& log) {
  ItemOutcome outcome;
  auto& record = outcome.record;
  record.item_id = item.id;
  record.run_id = job.run_id;
  const auto started = std::chrono::steady_clock::now();
  auto finish = [&]() {
    record.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                  started)
                            .count();
    record.raw_text = redact(record.raw_text, secret);
    if (record.error) record.error = redact(*record.error, secret);
  };

  const std::string body = build_request_body(cfg, build_prompt(item.text, job.prompt_template));
  auto delay = cfg.backoff_initial;
  for (std::size_t attempt = 1;; ++attempt) {
    record.attempt_count = attempt;
    const TransportReply reply = transport.post(body);

    if (reply.status == 401 || reply.status == 403) {
      record.error = "authentication failed (http " + std::to_string(reply.status) + ")";
      outcome.auth_failure = true;
      finish();
      return outcome;
    }
    if (is_transient(reply.status)) {
      const std::string reason =
          reply.status == 0 ? "no reply: " + reply.error : "http " + std::to_string(reply.status);
      log(redact("item " + item.id + " attempt " + std::to_string(attempt) + " failed: " + reason,
                 secret));
      if (attempt > cfg.max_retries) {
        record.error = "retries exhausted after " + std::to_string(attempt) + " attempts: " + reason;
        record.raw_text = reply.body;
        finish();
        return outcome;
      }
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * cfg.backoff_factor));
      continue;
    }
    if (reply.status < 200 || reply.status >= 300) {
      record.error = "refused (http " + std::to_string(reply.status) + ")";
      record.raw_text = reply.body;
      finish();
      return outcome;
    }

    std::string content;
    try {
      const auto envelope = nlohmann::json::parse(reply.body);
      content = envelope.at(nlohmann::json::json_pointer(cfg.response_pointer)).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      record.error = std::string("malformed reply: ") + e.what();
      record.raw_text = reply.body;
      finish();
      return outcome;
    }
    record.raw_text = content;
    try {
      record.labels = parse_llm_response(content);
    } catch (const ParseError& e) {
      const std::string what = e.what();
      record.error = what.find("no JSON object") != std::string::npos ? "refusal: " + what
                                                                      : "unparseable labels: " + what;
    }
    finish();
    return outcome;
  }
}

}  // namespace

JobSummary run_job(const AnnotationJob& job, const ModelEndpointConfig& cfg, ChatTransport& transport,
                   std::ostream* log) {
  cfg.validate();
  const std::string secret =
      cfg.credential_env.empty() ? std::string()
                                 : [&] {
                                     const char* v = std::getenv(cfg.credential_env.c_str());
                                     return v ? std::string(v) : std::string();
                                   }();

  std::set<std::string> done;
  if (job.resume && std::filesystem::exists(job.output)) {
    for (const auto& r : load_response_records(job.output)) {
      if (r.run_id == job.run_id) done.insert(r.item_id);
    }
  }
  std::vector<const CorpusItem*> pending;
  JobSummary summary;
  std::set<std::string> queued;
  for (const auto& item : job.items) {
    if (done.count(item.id) || !queued.insert(item.id).second) {
      ++summary.skipped;
      continue;
    }
    pending.push_back(&item);
  }

  RecordWriter writer(job.output, job.resume);
  std::mutex state_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::string auth_message;

  auto log_line = [&](std::string line) {
    std::lock_guard lock(state_mutex);
    if (log) *log << line << '\n';
    summary.attempt_log.push_back(std::move(line));
  };

  auto worker = [&]() {
    while (!abort.load()) {
      const std::size_t n = next.fetch_add(1);
      if (n >= pending.size()) return;
      try {
        auto outcome = annotate_item(*pending[n], job, cfg, transport, secret, log_line);
        if (outcome.auth_failure) {
          std::lock_guard lock(state_mutex);
          if (!abort.exchange(true)) auth_message = *outcome.record.error;
          return;
        }
        writer.write(outcome.record);
        std::lock_guard lock(state_mutex);
        ++summary.attempted;
        if (outcome.record.labels) {
          ++summary.succeeded;
        } else {
          ++summary.failed;
        }
      } catch (...) {
        std::lock_guard lock(state_mutex);
        if (!failure) failure = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t n_workers = std::min(cfg.max_concurrent, std::max<std::size_t>(pending.size(), 1));
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  if (!auth_message.empty()) throw Error(ErrorKind::kAuthentication, auth_message + "; job aborted");
  return summary;
}

JobSummary run_job(const AnnotationJob& job, const ModelEndpointConfig& cfg, std::ostream* log) {
  std::string credential;
  if (!cfg.credential_env.empty()) {
    const char* value = std::getenv(cfg.credential_env.c_str());
    if (!value) {
      throw Error(ErrorKind::kConfig,
                  "environment variable '" + cfg.credential_env + "' is not set");
    }
    credential = value;
  }
  auto transport = make_http_transport(cfg, std::move(credential));
  return run_job(job, cfg, *transport, log);
}

}  // namespace dsbayes
