// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "genius/advisor.hpp"
#include "genius/error.hpp"

// OpenAI-compatible chat-completions client:
//   POST {base_url}/chat/completions  {model, messages: [{role, content}...], temperature}
//   reply text = choices[0].message.content
namespace genius {

inline constexpr const char* kApiKeyEnv = "GENIUS_API_KEY";

struct ChatConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key;
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{1'000};  // doubled after every failed attempt
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<Message>& messages, double temperature) = 0;
};

inline nlohmann::ordered_json build_chat_request(const std::string& model,
                                                 const std::vector<Message>& messages,
                                                 double temperature) {
  nlohmann::ordered_json j;
  j["model"] = model;
  auto msgs = nlohmann::ordered_json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  j["messages"] = std::move(msgs);
  j["temperature"] = temperature;
  return j;
}

inline std::string extract_reply(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError("chat endpoint returned non-JSON body");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("chat response lacks choices[0].message.content");
  }
}

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

class OpenAiChatClient final : public ChatClient {
 public:
  explicit OpenAiChatClient(ChatConfig cfg) : cfg_(std::move(cfg)) {
    auto [host, prefix] = split_base_url(cfg_.base_url);
    host_ = host;
    path_ = prefix + "/chat/completions";
  }

  const ChatConfig& config() const { return cfg_; }

  std::string complete(const std::vector<Message>& messages, double temperature) override {
    const std::string body = build_chat_request(cfg_.model, messages, temperature).dump();
    auto delay = cfg_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      httplib::Client cli(host_);
      if (!cli.is_valid()) throw TransportError("unsupported base URL '" + cfg_.base_url + "'");
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      httplib::Headers headers;
      if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = cli.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return extract_reply(res->body);
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (res->status != 429 && res->status < 500) throw TransportError(last_error);
    }
    throw TransportError(last_error);
  }

 private:
  ChatConfig cfg_;
  std::string host_;
  std::string path_;
};

// Advisor backed by a live chat model. Sends the session transcript at the
// session temperature.
class LlmAdvisor final : public Advisor {
 public:
  explicit LlmAdvisor(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}
  std::string tag() const override { return "openai"; }
  std::string respond(const AdvisorSession& s) override {
    return client_->complete(s.request_messages(), s.temperature());
  }

 private:
  std::shared_ptr<ChatClient> client_;
};

}  // namespace genius
