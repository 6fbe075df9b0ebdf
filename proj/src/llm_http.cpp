#include <thread>

#include "spanel/error.hpp"
#include "spanel/http.hpp"
#include "spanel/llm.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "llm-bridge";

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "base URL needs a scheme: '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  out.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpChatProvider::HttpChatProvider(HttpProviderConfig config)
    : config_(std::move(config)), sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

std::string HttpChatProvider::complete(const ChatRequest& request) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + request.params.timeout;
  const SplitUrl url = split_url(config_.base_url);
  const std::string body = build_chat_completion_body(request, config_.model).dump();

  httplib::Client client(url.origin);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto wait = config_.retry.backoff(attempt);
      if (clock::now() + wait >= deadline) break;
      sleeper_(wait);
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (remaining.count() <= 0) break;
    const auto secs = static_cast<time_t>(remaining.count() / 1000);
    const auto usecs = static_cast<time_t>((remaining.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_chat_completion_body(res->body);
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (!retryable(res->status)) break;
  }
  if (last_error.empty()) last_error = "deadline exceeded";
  throw Error(ErrorCode::kProvider, kModule, last_error, request.stage);
}

}  // namespace spanel
