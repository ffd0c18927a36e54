#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>

#include "dsbayes/llm_client.hpp"

namespace dsbayes::testing {

inline std::string chat_envelope(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

inline std::string labels_reply(bool care, bool fairness, bool loyalty, bool authority, bool sanctity) {
  nlohmann::ordered_json j{{"care/harm", care},
                           {"fairness/cheating", fairness},
                           {"loyalty/betrayal", loyalty},
                           {"authority/subversion", authority},
                           {"sanctity/degradation", sanctity}};
  return chat_envelope(j.dump(1));
}

/// Replies scripted per item: the first script key found in the prompt
/// selects a queue of replies, consumed one per request. The last reply of a
/// queue repeats once the queue is drained.
class ScriptedEndpoint {
 public:
  void script(const std::string& marker, std::deque<TransportReply> replies) {
    std::lock_guard lock(mutex_);
    scripts_[marker] = std::move(replies);
  }

  TransportReply answer(const std::string& request_body) {
    const auto request = nlohmann::json::parse(request_body);
    const std::string prompt = request.at("messages").at(0).at("content").get<std::string>();
    std::lock_guard lock(mutex_);
    ++requests_;
    bodies_.push_back(request_body);
    for (auto& [marker, queue] : scripts_) {
      if (prompt.find(marker) == std::string::npos) continue;
      ++per_marker_[marker];
      TransportReply reply = queue.front();
      if (queue.size() > 1) queue.pop_front();
      return reply;
    }
    return {500, "", "unscripted"};
  }

  std::size_t requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }
  std::size_t requests_for(const std::string& marker) const {
    std::lock_guard lock(mutex_);
    auto it = per_marker_.find(marker);
    return it == per_marker_.end() ? 0 : it->second;
  }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<TransportReply>> scripts_;
  std::map<std::string, std::size_t> per_marker_;
  std::vector<std::string> bodies_;
  std::size_t requests_ = 0;
};

class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(ScriptedEndpoint& endpoint) : endpoint_(endpoint) {}
  TransportReply post(const std::string& body) override { return endpoint_.answer(body); }

 private:
  ScriptedEndpoint& endpoint_;
};

}  // namespace dsbayes::testing
