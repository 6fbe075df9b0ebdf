#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanel/bridge.hpp"
#include "spanel/core.hpp"
#include "spanel/edit.hpp"
#include "spanel/encoder.hpp"
#include "spanel/error.hpp"
#include "spanel/llm.hpp"
#include "spanel/render.hpp"

namespace spanel {

struct ServiceConfig {
  std::string data_dir;                     // empty: in-memory only
  std::shared_ptr<ChatProvider> provider;   // null: mode=llm and chat answer 502
  BridgeOptions bridge;
  EncoderWeights weights = EncoderWeights::from_seed({}, 0);
  std::shared_ptr<TextEmbedder> embedder;   // null: HashEmbedder of weights.config.text_dim
  RenderConfig render;
};

struct SessionInfo {
  std::string id;
  std::int64_t version = 0;
  std::string created;
  std::string updated;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Panel sessions with an append-only version history; history[k].version is
// k. Mutations of one session are serialized and may carry an expected
// version, a mismatch raises Error(kConflict). Reads take shared locks only.
// With a data directory every session is mirrored to <data_dir>/<id>.jsonl,
// one line per version, and reloaded on construction.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  SessionInfo create_session(const std::string& prompt, const std::string& mode, SessionLog* log = nullptr);
  SessionInfo info(const std::string& id) const;
  std::vector<SessionInfo> list() const;
  SemanticPanel panel(const std::string& id, std::optional<std::int64_t> version = std::nullopt) const;
  std::vector<SemanticPanel> history(const std::string& id) const;

  // The whole batch becomes one new version, or nothing changes.
  SemanticPanel apply_ops(const std::string& id, const std::vector<EditOp>& ops,
                          std::optional<std::int64_t> expected_version = std::nullopt);
  // The provider runs without holding the session lock; a concurrent
  // mutation in the meantime makes this call fail with kConflict.
  ChatEditResult chat(const std::string& id, const std::string& instruction,
                      std::optional<std::int64_t> expected_version = std::nullopt, SessionLog* log = nullptr);
  // Appends a copy of the previous version. kConflict at version 0.
  SemanticPanel undo(const std::string& id, std::optional<std::int64_t> expected_version = std::nullopt);

  // Socket-free request dispatch used by the HTTP binding and the tests.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  const ServiceConfig& config() const { return config_; }
  const TextEmbedder& embedder() const { return *config_.embedder; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  SemanticPanel commit(Session& session, SemanticPanel next, const std::string& cause);
  void persist_line(const Session& session, const nlohmann::ordered_json& line) const;
  void load_sessions();
  std::string new_id();

  ServiceConfig config_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  std::uint64_t id_state_;
};

// Maps a library error to its HTTP status: 404 not found, 409 conflict,
// 422 invalid argument or validation, 400 parse, 502 provider, 500 I/O.
int http_status(const Error& error);
nlohmann::ordered_json error_to_json(const Error& error);

// HTTP binding of a Service (cpp-httplib). JSON errors carry the module,
// message, locus and, for provider failures, the stage.
class HttpServer {
 public:
  // With log_requests, one JSON line per request goes to std::clog.
  explicit HttpServer(Service& service, bool log_requests = true);
  ~HttpServer();

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; then call listen_bound().
  int bind_any_port(const std::string& host);
  bool listen_bound();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spanel
