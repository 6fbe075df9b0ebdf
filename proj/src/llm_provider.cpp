#include "spanel/llm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "spanel/error.hpp"
#include "spanel/image_io.hpp"
#include "spanel/panel_json.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "llm-bridge";

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(static_cast<long long>(std::min(ms, static_cast<double>(max_backoff.count()))));
}

HttpProviderConfig HttpProviderConfig::from_env() {
  HttpProviderConfig c;
  c.base_url = env_or_empty("SPANEL_LLM_BASE_URL");
  c.api_key = env_or_empty("SPANEL_LLM_API_KEY");
  c.model = env_or_empty("SPANEL_LLM_MODEL");
  if (c.base_url.empty()) c.base_url = "https://api.openai.com/v1";
  if (c.model.empty()) c.model = "gpt-4o-mini";
  return c;
}

nlohmann::json build_chat_completion_body(const ChatRequest& request, const std::string& model) {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model},
          {"messages", std::move(messages)},
          {"temperature", request.params.temperature},
          {"max_tokens", request.params.max_tokens}};
}

std::string parse_chat_completion_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProvider, kModule, std::string("chat completion body is not JSON: ") + e.what());
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kProvider, kModule, "chat completion has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::kProvider, kModule, "chat completion choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

MockChatProvider::MockChatProvider(const nlohmann::json& transcript) {
  if (!transcript.is_object() || !transcript.contains("entries") || !transcript["entries"].is_array()) {
    throw Error(ErrorCode::kParse, kModule, "transcript needs an 'entries' array");
  }
  for (std::size_t i = 0; i < transcript["entries"].size(); ++i) {
    const auto& e = transcript["entries"][i];
    const std::string locus = "entries[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("stage") || !e["stage"].is_string()) {
      throw Error(ErrorCode::kParse, kModule, "entry needs a string 'stage'", locus);
    }
    Entry entry;
    entry.stage = e["stage"].get<std::string>();
    if (e.contains("contains")) entry.contains = e["contains"].get<std::string>();
    if (e.contains("replies") && e["replies"].is_array()) {
      for (const auto& r : e["replies"]) entry.replies.push_back(r);
    } else if (e.contains("reply")) {
      entry.replies.push_back(e["reply"]);
    } else if (e.contains("error")) {
      entry.replies.push_back({{"error", e["error"]}});
    }
    if (entry.replies.empty()) throw Error(ErrorCode::kParse, kModule, "entry has no replies", locus);
    for (const auto& r : entry.replies) {
      if (!r.is_string() && !(r.is_object() && r.contains("error"))) {
        throw Error(ErrorCode::kParse, kModule, "reply must be a string or {\"error\": ...}", locus);
      }
    }
    entries_.push_back(std::move(entry));
  }
}

MockChatProvider MockChatProvider::from_file(const std::string& path) {
  return MockChatProvider(parse_json_text(read_file(path), kModule));
}

std::string MockChatProvider::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  std::string haystack = request.system_prompt;
  for (const auto& m : request.messages) {
    if (m.role == "user") haystack += "\n" + m.content;
  }
  for (auto& e : entries_) {
    if (e.stage != request.stage) continue;
    if (!e.contains.empty() && haystack.find(e.contains) == std::string::npos) continue;
    const auto& reply = e.replies[std::min(e.cursor, e.replies.size() - 1)];
    ++e.cursor;
    if (reply.is_object()) {
      throw Error(ErrorCode::kProvider, kModule, "provider failure: " + reply["error"].dump(), request.stage);
    }
    return reply.get<std::string>();
  }
  throw Error(ErrorCode::kProvider, kModule, "no scripted reply for stage '" + request.stage + "'", request.stage);
}

std::size_t MockChatProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace spanel
