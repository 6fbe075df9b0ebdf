#include "spanel/service.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spanel/image_io.hpp"
#include "spanel/palette.hpp"
#include "spanel/panel_json.hpp"
#include "spanel/tensor_io.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "service-cli";

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

[[noreturn]] void fail(ErrorCode code, const std::string& message, const std::string& locus = {}) {
  throw Error(code, kModule, message, locus);
}

void check_expected(const SemanticPanel& latest, std::optional<std::int64_t> expected) {
  if (expected && *expected != latest.version) {
    fail(ErrorCode::kConflict,
         "expected version " + std::to_string(*expected) + " but the session is at " + std::to_string(latest.version),
         "expected_version");
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::optional<std::int64_t> query_int(const std::map<std::string, std::string>& query, const std::string& key) {
  auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kInvalidArgument, "query parameter '" + key + "' must be an integer", key);
  }
}

std::optional<std::int64_t> expected_from(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("expected_version") || body["expected_version"].is_null()) {
    return std::nullopt;
  }
  if (!body["expected_version"].is_number_integer()) {
    fail(ErrorCode::kInvalidArgument, "expected_version must be an integer", "expected_version");
  }
  return body["expected_version"].get<std::int64_t>();
}

nlohmann::json body_json(const std::string& body, bool allow_empty) {
  if (allow_empty && trim(body).empty()) return nlohmann::json::object();
  return parse_json_text(body, kModule);
}

nlohmann::ordered_json info_json(const SessionInfo& info) {
  return {{"id", info.id}, {"version", info.version}, {"created", info.created}, {"updated", info.updated}};
}

HttpResponse json_response(int status, const nlohmann::ordered_json& body) {
  return {status, "application/json", body.dump(2) + "\n"};
}

}  // namespace

struct Service::Session {
  std::string id;
  std::string created;
  std::string updated;
  std::vector<SemanticPanel> history;
  mutable std::shared_mutex mu;

  SessionInfo info() const { return {id, history.back().version, created, updated}; }
};

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.embedder) config_.embedder = std::make_shared<HashEmbedder>(config_.weights.config.text_dim);
  if (config_.embedder->dim() != config_.weights.config.text_dim) {
    fail(ErrorCode::kInvalidArgument, "embedder dimension does not match the encoder weights");
  }
  config_.weights.check_shapes();
  config_.render.check();
  id_state_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  if (!config_.data_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config_.data_dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create data directory: " + ec.message(), config_.data_dir);
    load_sessions();
  }
}

Service::~Service() = default;

std::string Service::new_id() {
  std::lock_guard lock(id_mu_);
  for (;;) {
    std::uint64_t z = (id_state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    char buf[20];
    std::snprintf(buf, sizeof buf, "s%012llx", static_cast<unsigned long long>(z & 0xFFFFFFFFFFFFULL));
    std::shared_lock read(sessions_mu_);
    if (!sessions_.contains(buf)) return buf;
  }
}

void Service::persist_line(const Session& session, const nlohmann::ordered_json& line) const {
  if (config_.data_dir.empty()) return;
  const auto path = std::filesystem::path(config_.data_dir) / (session.id + ".jsonl");
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::kIo, "cannot append to " + path.string());
}

void Service::load_sessions() {
  for (const auto& file : std::filesystem::directory_iterator(config_.data_dir)) {
    if (file.path().extension() != ".jsonl") continue;
    auto session = std::make_shared<Session>();
    std::ifstream in(file.path(), std::ios::binary);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const std::string locus = file.path().filename().string() + ":" + std::to_string(line_no);
      nlohmann::json value;
      try {
        value = parse_json_text(line, kModule);
      } catch (const Error& e) {
        fail(ErrorCode::kIo, std::string("corrupt session log: ") + e.what(), locus);
      }
      if (line_no == 1) {
        if (!value.contains("session") || !value["session"].is_string()) {
          fail(ErrorCode::kIo, "session log must start with a header line", locus);
        }
        session->id = value["session"].get<std::string>();
        session->created = value.value("created", "");
        continue;
      }
      SemanticPanel p = panel_from_json_value(value.at("panel"));
      if (p.version != static_cast<std::int64_t>(session->history.size())) {
        fail(ErrorCode::kIo, "session log versions are not consecutive", locus);
      }
      session->history.push_back(std::move(p));
      session->updated = value.value("at", session->created);
    }
    if (session->history.empty()) fail(ErrorCode::kIo, "session log has no versions", file.path().string());
    sessions_[session->id] = std::move(session);
  }
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "unknown session '" + id + "'", "session");
  return it->second;
}

SemanticPanel Service::commit(Session& session, SemanticPanel next, const std::string& cause) {
  next.version = static_cast<std::int64_t>(session.history.size());
  require_valid(next, kModule);
  const std::string at = now_iso();
  persist_line(session, {{"version", next.version}, {"cause", cause}, {"at", at}, {"panel", panel_to_json_value(next)}});
  session.history.push_back(next);
  session.updated = at;
  return next;
}

SessionInfo Service::create_session(const std::string& prompt, const std::string& mode, SessionLog* log) {
  SemanticPanel first;
  first.prompt = prompt;
  if (mode == "llm") {
    if (!config_.provider) fail(ErrorCode::kProvider, "no LLM provider is configured", "descriptions");
    SessionLog local;
    first = text_to_panel(prompt, *config_.provider, config_.bridge, log ? *log : local);
  } else if (mode != "empty") {
    fail(ErrorCode::kInvalidArgument, "mode must be 'llm' or 'empty'", "mode");
  }
  auto session = std::make_shared<Session>();
  session->id = new_id();
  session->created = now_iso();
  session->updated = session->created;
  std::unique_lock session_lock(session->mu);
  persist_line(*session, {{"session", session->id}, {"created", session->created}});
  commit(*session, std::move(first), "create");
  {
    std::unique_lock lock(sessions_mu_);
    sessions_[session->id] = session;
  }
  return session->info();
}

SessionInfo Service::info(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lock(s->mu);
  return s->info();
}

std::vector<SessionInfo> Service::list() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::vector<SessionInfo> out;
  for (const auto& s : all) {
    std::shared_lock lock(s->mu);
    out.push_back(s->info());
  }
  return out;
}

SemanticPanel Service::panel(const std::string& id, std::optional<std::int64_t> version) const {
  auto s = find(id);
  std::shared_lock lock(s->mu);
  if (!version) return s->history.back();
  if (*version < 0 || *version >= static_cast<std::int64_t>(s->history.size())) {
    fail(ErrorCode::kNotFound, "session '" + id + "' has no version " + std::to_string(*version), "version");
  }
  return s->history[*version];
}

std::vector<SemanticPanel> Service::history(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lock(s->mu);
  return s->history;
}

SemanticPanel Service::apply_ops(const std::string& id, const std::vector<EditOp>& ops,
                                 std::optional<std::int64_t> expected_version) {
  if (ops.empty()) fail(ErrorCode::kInvalidArgument, "op batch is empty", "ops");
  auto s = find(id);
  std::unique_lock lock(s->mu);
  check_expected(s->history.back(), expected_version);
  return commit(*s, apply_edits(s->history.back(), ops), "ops");
}

ChatEditResult Service::chat(const std::string& id, const std::string& instruction,
                             std::optional<std::int64_t> expected_version, SessionLog* log) {
  if (!config_.provider) fail(ErrorCode::kProvider, "no LLM provider is configured", "chat_edit");
  auto s = find(id);
  SemanticPanel snapshot;
  {
    std::shared_lock lock(s->mu);
    snapshot = s->history.back();
  }
  check_expected(snapshot, expected_version);
  SessionLog local;
  ChatEditResult result = chat_edit(snapshot, instruction, *config_.provider, config_.bridge, log ? *log : local);
  std::unique_lock lock(s->mu);
  check_expected(s->history.back(), snapshot.version);
  if (result.ops.empty()) {
    result.panel = s->history.back();
    return result;
  }
  result.panel = commit(*s, std::move(result.panel), "chat");
  return result;
}

SemanticPanel Service::undo(const std::string& id, std::optional<std::int64_t> expected_version) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  check_expected(s->history.back(), expected_version);
  if (s->history.size() < 2) fail(ErrorCode::kConflict, "nothing to undo at version 0", "version");
  return commit(*s, s->history[s->history.size() - 2], "undo");
}

int http_status(const Error& error) {
  switch (error.code()) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kValidation: return 422;
    case ErrorCode::kParse: return error.module() == "llm-bridge" ? 502 : 400;
    case ErrorCode::kProvider: return 502;
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

nlohmann::ordered_json error_to_json(const Error& error) {
  nlohmann::ordered_json e;
  e["code"] = to_string(error.code());
  e["module"] = error.module();
  e["message"] = error.what();
  if (!error.locus().empty()) e["locus"] = error.locus();
  if (http_status(error) == 502 && !error.locus().empty()) e["stage"] = error.locus();
  return {{"error", e}};
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::map<std::string, std::string>& query, const std::string& body) {
  try {
    const auto parts = split_path(path);
    const auto size = [&](int w_default, int h_default) {
      const int w = static_cast<int>(query_int(query, "w").value_or(w_default));
      const int h = static_cast<int>(query_int(query, "h").value_or(h_default));
      return std::pair{w, h};
    };

    if (parts.size() == 1 && parts[0] == "health" && method == "GET") {
      return json_response(200, {{"status", "ok"}});
    }
    if (parts.size() == 1 && parts[0] == "palette" && method == "GET") {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      const Palette& palette = default_palette();
      for (std::size_t i = 0; i < palette.size(); ++i) {
        const auto& e = palette[i];
        out.push_back({{"index", i},
                       {"rgb", {e.rgb.r, e.rgb.g, e.rgb.b}},
                       {"lab", {e.lab.l, e.lab.a, e.lab.b}}});
      }
      return json_response(200, out);
    }
    if (parts.empty() || parts[0] != "sessions") fail(ErrorCode::kNotFound, "no route for " + method + " " + path);

    if (parts.size() == 1) {
      if (method == "GET") {
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& info : list()) out.push_back(info_json(info));
        return json_response(200, out);
      }
      if (method == "POST") {
        const nlohmann::json req = body_json(body, false);
        if (!req.is_object()) fail(ErrorCode::kInvalidArgument, "body must be a JSON object");
        const std::string prompt = req.value("prompt", "");
        const std::string mode = req.value("mode", "empty");
        SessionLog log;
        const SessionInfo info = create_session(prompt, mode, &log);
        return json_response(201, {{"session", info_json(info)},
                                   {"panel", panel_to_json_value(panel(info.id))},
                                   {"warnings", log.warnings()}});
      }
    }

    const std::string& id = parts.size() >= 2 ? parts[1] : path;
    const std::string action = parts.size() >= 3 ? parts[2] : "";
    if (parts.size() > 3) fail(ErrorCode::kNotFound, "no route for " + method + " " + path);

    if (action.empty() && method == "GET") {
      const SemanticPanel p = panel(id, query_int(query, "version"));
      return json_response(200, {{"session", info_json(info(id))}, {"panel", panel_to_json_value(p)}});
    }
    if (action == "history" && method == "GET") {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const auto& p : history(id)) out.push_back(panel_to_json_value(p));
      return json_response(200, out);
    }
    if (action == "ops" && method == "POST") {
      const nlohmann::json req = body_json(body, false);
      const nlohmann::json* ops_json = &req;
      std::optional<std::int64_t> expected = query_int(query, "expected_version");
      if (req.is_object()) {
        if (!req.contains("ops")) fail(ErrorCode::kInvalidArgument, "body needs an 'ops' array", "ops");
        ops_json = &req["ops"];
        if (auto e = expected_from(req)) expected = e;
      }
      if (!ops_json->is_array()) fail(ErrorCode::kInvalidArgument, "ops must be an array", "ops");
      std::vector<EditOp> ops;
      for (std::size_t i = 0; i < ops_json->size(); ++i) {
        ops.push_back(edit_op_from_json((*ops_json)[i], "ops[" + std::to_string(i) + "]"));
      }
      const SemanticPanel p = apply_ops(id, ops, expected);
      return json_response(200, {{"session", info_json(info(id))}, {"panel", panel_to_json_value(p)}});
    }
    if (action == "chat" && method == "POST") {
      const nlohmann::json req = body_json(body, false);
      if (!req.is_object() || !req.contains("instruction") || !req["instruction"].is_string()) {
        fail(ErrorCode::kInvalidArgument, "body needs a string 'instruction'", "instruction");
      }
      SessionLog log;
      const ChatEditResult r = chat(id, req["instruction"].get<std::string>(), expected_from(req), &log);
      nlohmann::ordered_json ops = nlohmann::ordered_json::array();
      for (const auto& op : r.ops) ops.push_back(edit_op_to_json(op));
      return json_response(200, {{"session", info_json(info(id))},
                                 {"panel", panel_to_json_value(r.panel)},
                                 {"ops", ops},
                                 {"warnings", log.warnings()}});
    }
    if (action == "undo" && method == "POST") {
      std::optional<std::int64_t> expected = query_int(query, "expected_version");
      if (auto e = expected_from(body_json(body, true))) expected = e;
      const SemanticPanel p = undo(id, expected);
      return json_response(200, {{"session", info_json(info(id))}, {"panel", panel_to_json_value(p)}});
    }
    if (action == "condition" && method == "GET") {
      const auto [w, h] = size(512, 512);
      const SemanticPanel p = panel(id, query_int(query, "version"));
      const LatentGrid grid = LatentGrid::from_image(w, h, config_.weights.config.channels);
      const ConditionMap map = assemble_condition_map(p, grid, embedder(), config_.weights, false);
      return {200, "application/octet-stream", encode_condition(map.data)};
    }
    if (action == "attention" && method == "GET") {
      const auto [w, h] = size(512, 512);
      const SemanticPanel p = panel(id, query_int(query, "version"));
      const LatentGrid grid = LatentGrid::from_image(w, h, config_.weights.config.channels);
      const AttentionMask mask = build_attention_mask(p, grid.rows, grid.cols, embedder().tokenize(p.prompt), embedder());
      return {200, "application/octet-stream", encode_attention(mask)};
    }
    if ((action == "render" || action == "render_edit") && method == "GET") {
      RenderConfig cfg = config_.render;
      std::tie(cfg.width, cfg.height) = size(cfg.width, cfg.height);
      const std::string format = query.contains("format") ? query.at("format") : "png";
      if (format != "png" && format != "ppm") fail(ErrorCode::kInvalidArgument, "format must be png or ppm", "format");
      RgbImage image;
      if (action == "render") {
        image = render_panel(panel(id, query_int(query, "version")), cfg);
      } else {
        const std::int64_t latest = info(id).version;
        const std::int64_t to = query_int(query, "to").value_or(latest);
        const std::int64_t from = query_int(query, "from").value_or(std::max<std::int64_t>(0, to - 1));
        image = render_edit(panel(id, from), panel(id, to), cfg);
      }
      if (format == "ppm") return {200, "image/x-portable-pixmap", encode_ppm(image)};
      return {200, "image/png", encode_png(image)};
    }
    fail(ErrorCode::kNotFound, "no route for " + method + " " + path);
  } catch (const Error& e) {
    return json_response(http_status(e), error_to_json(e));
  } catch (const nlohmann::json::exception& e) {
    return json_response(400, error_to_json(Error(ErrorCode::kParse, kModule, e.what())));
  } catch (const std::exception& e) {
    return json_response(500, error_to_json(Error(ErrorCode::kIo, kModule, e.what())));
  }
}

}  // namespace spanel
