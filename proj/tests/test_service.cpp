#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "spanel/error.hpp"
#include "spanel/http.hpp"
#include "spanel/image_io.hpp"
#include "spanel/panel_json.hpp"
#include "spanel/service.hpp"
#include "spanel/tensor_io.hpp"
#include "support.hpp"

using namespace spanel;
using nlohmann::json;

namespace {

std::string source(const std::string& rel) { return std::string(SPANEL_SOURCE_DIR) + "/" + rel; }

ServiceConfig demo_config(const std::string& data_dir = {}) {
  ServiceConfig c;
  c.data_dir = data_dir;
  c.provider = std::make_shared<MockChatProvider>(nlohmann::json::parse(read_file(source("assets/transcripts/demo.json"))));
  return c;
}

VisualConcept concept_at(const std::string& id, double xc) {
  VisualConcept vc;
  vc.id = id;
  vc.description = "box " + id;
  vc.box = {xc, 0.5, 0.2, 0.2};
  return vc;
}

HttpResponse call(Service& s, const std::string& method, const std::string& path, const json& body = nullptr,
                  std::map<std::string, std::string> query = {}) {
  return s.handle(method, path, query, body.is_null() ? "" : body.dump());
}

std::string session_of(const HttpResponse& r) { return json::parse(r.body)["session"]["id"].get<std::string>(); }

}  // namespace

TEST_SUITE("service") {

TEST_CASE("sessions keep every version") {
  Service s(demo_config());
  const SessionInfo info = s.create_session("a quiet room", "empty");
  CHECK(info.version == 0);
  const SemanticPanel v1 = s.apply_ops(info.id, {EditOp::add(concept_at("c1_1", 0.3))});
  CHECK(v1.version == 1);
  CHECK(s.info(info.id).version == 1);
  CHECK(s.panel(info.id, 0).concepts.empty());
  CHECK(s.panel(info.id, 1) == v1);
  CHECK(s.history(info.id).size() == 2);
  CHECK(testing::error_code_of([&] { s.panel(info.id, 2); }) == ErrorCode::kNotFound);
  CHECK(testing::error_code_of([&] { s.panel("nope"); }) == ErrorCode::kNotFound);
  CHECK(testing::error_code_of([&] { s.create_session("x", "magic"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("a failing batch changes nothing") {
  Service s(demo_config());
  const std::string id = s.create_session("", "empty").id;
  s.apply_ops(id, {EditOp::add(concept_at("c1_1", 0.3))});
  const SemanticPanel before = s.panel(id);
  CHECK(testing::error_code_of([&] {
          s.apply_ops(id, {EditOp::add(concept_at("c2_1", 0.7)), EditOp::remove("missing")});
        }) == ErrorCode::kNotFound);
  CHECK(s.panel(id) == before);
  CHECK(s.info(id).version == 1);
  CHECK(testing::error_code_of([&] { s.apply_ops(id, {}); }) == ErrorCode::kInvalidArgument);
  // a batch of several ops is still one version
  s.apply_ops(id, {EditOp::add(concept_at("c2_1", 0.7)), EditOp::remove("c1_1")});
  CHECK(s.info(id).version == 2);
}

TEST_CASE("concurrent writers with the same expected version") {
  Service s(demo_config());
  const std::string id = s.create_session("", "empty").id;
  constexpr int kWriters = 8;
  std::atomic<int> ok{0}, conflicts{0}, other{0};
  std::atomic<bool> go{false};
  std::vector<std::thread> threads;
  for (int k = 0; k < kWriters; ++k) {
    threads.emplace_back([&, k] {
      while (!go) std::this_thread::yield();
      try {
        s.apply_ops(id, {EditOp::add(concept_at("c1_" + std::to_string(k + 1), 0.1 + 0.1 * k))}, 0);
        ++ok;
      } catch (const Error& e) {
        (e.code() == ErrorCode::kConflict ? conflicts : other)++;
      }
    });
  }
  go = true;
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflicts == kWriters - 1);
  CHECK(other == 0);
  CHECK(s.info(id).version == 1);
  CHECK(s.panel(id).concepts.size() == 1);
}

TEST_CASE("undo appends the previous version") {
  Service s(demo_config());
  const std::string id = s.create_session("", "empty").id;
  CHECK(testing::error_code_of([&] { s.undo(id); }) == ErrorCode::kConflict);
  s.apply_ops(id, {EditOp::add(concept_at("c1_1", 0.3))});
  const SemanticPanel u = s.undo(id);
  CHECK(u.version == 2);
  CHECK(u.concepts.empty());
  CHECK(s.history(id).size() == 3);
  CHECK(s.panel(id, 1).concepts.size() == 1);
  CHECK(testing::error_code_of([&] { s.undo(id, 1); }) == ErrorCode::kConflict);
}

TEST_CASE("chat goes through the provider") {
  Service s(demo_config());
  SessionLog log;
  const std::string id =
      s.create_session("a red apple next to a brown mushroom on a wooden table, soft light", "llm", &log).id;
  CHECK(panel_to_json(s.panel(id)) + "\n" == read_file(source("assets/samples/apple_mushroom.json")));
  const ChatEditResult same = s.chat(id, "keep everything as it is");
  CHECK(same.ops.empty());
  CHECK(s.info(id).version == 0);
  const ChatEditResult r = s.chat(id, "remove the mushroom");
  REQUIRE(r.ops.size() == 1);
  CHECK(r.ops[0] == EditOp::remove("c0_2"));
  CHECK(s.info(id).version == 1);
  CHECK(testing::error_code_of([&] { s.chat(id, "remove the mushroom", 0); }) == ErrorCode::kConflict);
}

TEST_CASE("without a provider llm routes answer 502") {
  ServiceConfig c;
  Service s(c);
  const HttpResponse r = call(s, "POST", "/sessions", {{"prompt", "x"}, {"mode", "llm"}});
  CHECK(r.status == 502);
  CHECK(json::parse(r.body)["error"]["stage"] == "descriptions");
}

TEST_CASE("route status codes") {
  Service s(demo_config());
  const HttpResponse created = call(s, "POST", "/sessions", {{"prompt", "a room"}, {"mode", "empty"}});
  REQUIRE(created.status == 201);
  const std::string id = session_of(created);
  CHECK(call(s, "GET", "/health").status == 200);
  CHECK(json::parse(call(s, "GET", "/palette").body).size() == kPaletteSize);
  CHECK(call(s, "GET", "/sessions/" + id).status == 200);
  CHECK(call(s, "GET", "/sessions/unknown").status == 404);
  CHECK(call(s, "GET", "/nowhere").status == 404);
  CHECK(call(s, "POST", "/sessions/" + id + "/undo").status == 409);
  CHECK(call(s, "POST", "/sessions/" + id + "/ops", {{"ops", json::array()}}).status == 422);
  CHECK(call(s, "POST", "/sessions/" + id + "/ops", {{"ops", {{{"kind", "warp"}}}}}).status == 422);
  CHECK(s.handle("POST", "/sessions/" + id + "/ops", {}, "{not json").status == 400);
  CHECK(call(s, "GET", "/sessions/" + id, nullptr, {{"version", "x"}}).status == 422);

  const json add = {{"ops", {edit_op_to_json(EditOp::add(concept_at("c1_1", 0.3)))}}, {"expected_version", 0}};
  const HttpResponse applied = call(s, "POST", "/sessions/" + id + "/ops", add);
  CHECK(applied.status == 200);
  CHECK(json::parse(applied.body)["session"]["version"] == 1);
  const HttpResponse stale = call(s, "POST", "/sessions/" + id + "/ops", add);
  CHECK(stale.status == 409);
  CHECK(json::parse(stale.body)["error"]["code"].is_string());
  CHECK(json::parse(call(s, "GET", "/sessions/" + id + "/history").body).size() == 2);

  const HttpResponse chat = call(s, "POST", "/sessions/" + id + "/chat", {{"instruction", "gibberish"}});
  CHECK(chat.status == 502);
  CHECK(json::parse(chat.body)["error"]["stage"] == "chat_edit");
  CHECK(call(s, "POST", "/sessions/" + id + "/chat", {{"nothing", 1}}).status == 422);
}

TEST_CASE("condition, attention and render endpoints") {
  Service s(demo_config());
  const std::string id = s.create_session("a box in a room", "empty").id;
  VisualConcept vc = concept_at("c1_1", 0.5);
  vc.description = "box";
  s.apply_ops(id, {EditOp::add(vc)});

  const HttpResponse cond = call(s, "GET", "/sessions/" + id + "/condition", nullptr, {{"w", "64"}, {"h", "32"}});
  REQUIRE(cond.status == 200);
  CHECK(cond.body.substr(0, 4) == "RANC");
  const LatentTensor t = decode_condition(cond.body);
  CHECK(t.rows == 4);
  CHECK(t.cols == 8);
  CHECK(t.channels == s.config().weights.config.channels);

  const HttpResponse att = call(s, "GET", "/sessions/" + id + "/attention", nullptr, {{"w", "64"}, {"h", "64"}});
  REQUIRE(att.status == 200);
  CHECK(att.body.substr(0, 4) == "RANM");
  const AttentionMask m = decode_attention(att.body);
  CHECK(m.patches == 64);
  CHECK(m.tokens == 5);

  const HttpResponse png = call(s, "GET", "/sessions/" + id + "/render", nullptr, {{"w", "64"}, {"h", "64"}});
  REQUIRE(png.status == 200);
  CHECK(png.content_type == "image/png");
  RenderConfig cfg;
  cfg.width = cfg.height = 64;
  CHECK(decode_png(png.body) == render_panel(s.panel(id), cfg));
  const HttpResponse ppm =
      call(s, "GET", "/sessions/" + id + "/render_edit", nullptr, {{"w", "64"}, {"h", "64"}, {"format", "ppm"}});
  REQUIRE(ppm.status == 200);
  CHECK(decode_ppm(ppm.body) == render_edit(s.panel(id, 0), s.panel(id, 1), cfg));
  CHECK(call(s, "GET", "/sessions/" + id + "/render", nullptr, {{"format", "gif"}}).status == 422);
  CHECK(call(s, "GET", "/sessions/" + id + "/render", nullptr, {{"w", "60"}}).status == 422);
}

TEST_CASE("sessions survive a restart") {
  testing::TempDir dir;
  std::string id;
  {
    Service s(demo_config(dir.path().string()));
    id = s.create_session("persisted", "empty").id;
    s.apply_ops(id, {EditOp::add(concept_at("c1_1", 0.3))});
    s.undo(id);
  }
  Service again(demo_config(dir.path().string()));
  CHECK(again.info(id).version == 2);
  CHECK(again.panel(id, 1).concepts.size() == 1);
  CHECK(again.panel(id).prompt == "persisted");
  CHECK(again.list().size() == 1);

  std::ofstream(dir.file(id + ".jsonl"), std::ios::app) << "{garbage\n";
  CHECK(testing::error_code_of([&] { Service broken(demo_config(dir.path().string())); }) == ErrorCode::kIo);
}

TEST_CASE("error status mapping") {
  CHECK(http_status(Error(ErrorCode::kNotFound, "service", "x")) == 404);
  CHECK(http_status(Error(ErrorCode::kConflict, "service", "x")) == 409);
  CHECK(http_status(Error(ErrorCode::kValidation, "panel-core", "x")) == 422);
  CHECK(http_status(Error(ErrorCode::kInvalidArgument, "panel-edit", "x")) == 422);
  CHECK(http_status(Error(ErrorCode::kParse, "panel-core", "x")) == 400);
  CHECK(http_status(Error(ErrorCode::kParse, "llm-bridge", "x", "boxes")) == 502);
  CHECK(http_status(Error(ErrorCode::kProvider, "llm-bridge", "x", "boxes")) == 502);
  CHECK(http_status(Error(ErrorCode::kIo, "service", "x")) == 500);
  CHECK(error_to_json(Error(ErrorCode::kProvider, "llm-bridge", "x", "boxes"))["error"]["stage"] == "boxes");
}

TEST_CASE("http binding") {
  Service s(demo_config());
  HttpServer server(s, false);
  const int port = server.bind_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_bound(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result health;
  for (int attempt = 0; attempt < 50 && !health; ++attempt) {
    health = client.Get("/health");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto created = client.Post("/sessions", R"({"prompt": "over http", "mode": "empty"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["session"]["id"];
  const auto ops = client.Post("/sessions/" + id + "/ops?expected_version=0",
                               json::array({edit_op_to_json(EditOp::add(concept_at("c1_1", 0.4)))}).dump(),
                               "application/json");
  REQUIRE(ops);
  CHECK(ops->status == 200);
  const auto stale = client.Post("/sessions/" + id + "/undo?expected_version=0", "", "application/json");
  REQUIRE(stale);
  CHECK(stale->status == 409);
  const auto v0 = client.Get("/sessions/" + id + "?version=0");
  REQUIRE(v0);
  CHECK(json::parse(v0->body)["panel"]["concepts"].empty());
  const auto missing = client.Get("/sessions/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  server.stop();
  t.join();
}

}
