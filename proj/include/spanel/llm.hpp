#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace spanel {

struct ChatMessage {
  std::string role;  // "user" | "assistant"
  std::string content;
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
};

struct ChatRequest {
  std::string stage;  // bookkeeping only, never sent over the wire
  std::string system_prompt;
  std::vector<ChatMessage> messages;
  ChatParams params;
};

// A chat-completion backend. Implementations throw Error(kProvider) on
// transport failure, deadline expiry, or an unusable response.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff(int attempt) const;  // attempt >= 1
};

struct HttpProviderConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model;
  RetryPolicy retry;

  // SPANEL_LLM_BASE_URL, SPANEL_LLM_API_KEY, SPANEL_LLM_MODEL.
  static HttpProviderConfig from_env();
};

// OpenAI-compatible POST {base_url}/chat/completions. Retries transport
// errors, 429 and 5xx with exponential backoff; the request timeout bounds
// each attempt and the whole call.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(HttpProviderConfig config);
  std::string complete(const ChatRequest& request) override;

  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  HttpProviderConfig config_;
  Sleeper sleeper_;
};

nlohmann::json build_chat_completion_body(const ChatRequest& request, const std::string& model);
// choices[0].message.content; throws Error(kProvider) when absent.
std::string parse_chat_completion_body(const std::string& body);

// Replays canned replies from a transcript:
//   {"entries": [{"stage": "boxes", "contains": "cat", "replies": ["...", {"error": "timeout"}]}]}
// A request matches the first entry with its stage whose `contains` (if any)
// occurs in the system prompt or a user message. Replies of an entry are
// served in order and the last one repeats. {"error": ...} raises a provider
// failure with that message.
class MockChatProvider final : public ChatProvider {
 public:
  explicit MockChatProvider(const nlohmann::json& transcript);
  static MockChatProvider from_file(const std::string& path);

  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  struct Entry {
    std::string stage;
    std::string contains;
    std::vector<nlohmann::json> replies;
    std::size_t cursor = 0;
  };
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  std::size_t calls_ = 0;
};

// Provider backed by a callable; handy for embedding and tests.
class FunctionChatProvider final : public ChatProvider {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionChatProvider(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

}  // namespace spanel
