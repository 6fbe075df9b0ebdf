#include <doctest.h>

#include <cstdio>
#include <sys/wait.h>

#include "spanel/image_io.hpp"
#include "spanel/panel_json.hpp"
#include "spanel/tensor_io.hpp"
#include "support.hpp"

using namespace spanel;
using nlohmann::json;

namespace {

std::string source(const std::string& rel) { return std::string(SPANEL_SOURCE_DIR) + "/" + rel; }

struct Run {
  int status = -1;
  std::string out;
};

// Runs the panel binary with stdout captured; stderr goes to `err_file` if set.
Run panel(const std::string& args, const std::string& err_file = "/dev/null") {
  const std::string cmd = std::string("'") + PANEL_BIN + "' " + args + " 2>'" + err_file + "'";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

const std::string kSample = "assets/samples/apple_mushroom.json";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen with a transcript reproduces the sample") {
  const std::string args = "gen --prompt 'a red apple next to a brown mushroom on a wooden table, soft light' --mock '" +
                           source("assets/transcripts/demo.json") + "'";
  const Run a = panel(args);
  const Run b = panel(args);
  CHECK(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == read_file(source(kSample)));
}

TEST_CASE("diff of identical panels is empty") {
  const Run r = panel("diff --old '" + source(kSample) + "' --new '" + source(kSample) + "'");
  CHECK(r.status == 0);
  CHECK(json::parse(r.out)["adjusted"].empty());
}

TEST_CASE("edit then diff") {
  testing::TempDir dir;
  write_file(dir.file("op.json"), R"({"kind": "remove", "target": "c0_2"})");
  const Run e = panel("edit --in '" + source(kSample) + "' --op '" + dir.file("op.json") + "' -o '" + dir.file("new.json") + "'");
  CHECK(e.status == 0);
  const SemanticPanel p = panel_from_json(read_file(dir.file("new.json")));
  CHECK(p.version == 1);
  CHECK(p.concepts.size() == 1);
  const Run d = panel("diff --old '" + source(kSample) + "' --new '" + dir.file("new.json") + "'");
  const json adjusted = json::parse(d.out)["adjusted"];
  REQUIRE(adjusted.size() == 1);
  CHECK(adjusted[0]["id"] == "c0_2");
}

TEST_CASE("encode writes a RANC file of latent size") {
  testing::TempDir dir;
  const Run r = panel("encode --in '" + source(kSample) + "' --w 64 --h 32 -o '" + dir.file("c.ranc") +
                      "' --attention '" + dir.file("a.ranm") + "'");
  CHECK(r.status == 0);
  const LatentTensor t = decode_condition(read_file(dir.file("c.ranc")));
  CHECK(t.rows == 4);
  CHECK(t.cols == 8);
  CHECK(decode_attention(read_file(dir.file("a.ranm"))).patches == 32);
}

TEST_CASE("render writes an image") {
  testing::TempDir dir;
  CHECK(panel("render --in '" + source(kSample) + "' --w 64 --h 64 -o '" + dir.file("r.ppm") + "'").status == 0);
  const RgbImage img = decode_ppm(read_file(dir.file("r.ppm")));
  CHECK(img.width == 64);
}

TEST_CASE("errors are JSON on stderr") {
  testing::TempDir dir;
  write_file(dir.file("bad.json"), "{\"prompt\": 3}");
  const Run r = panel("validate --in '" + dir.file("bad.json") + "'", dir.file("err.txt"));
  CHECK(r.status == 1);
  const json err = json::parse(read_file(dir.file("err.txt")));
  CHECK(err["error"]["code"].is_string());
  CHECK(err["error"]["module"] == "panel-core");
}

TEST_CASE("validate reports violations with exit code 2") {
  testing::TempDir dir;
  json p = json::parse(read_file(source(kSample)));
  p["concepts"][0]["box"] = {0.5, 0.5, 1.5, 0.2};
  write_file(dir.file("p.json"), p.dump());
  const Run r = panel("validate --in '" + dir.file("p.json") + "'");
  CHECK(r.status == 2);
  CHECK(!json::parse(r.out).empty());
  CHECK(panel("validate --in '" + source(kSample) + "'").status == 0);
}

TEST_CASE("pseudo and palette") {
  const Run r = panel("pseudo --seed 4 --n 3 --relation all");
  CHECK(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
  const Run pal = panel("palette");
  CHECK(pal.status == 0);
  CHECK(pal.out == read_file(source("assets/palette_v1.txt")));
}

}
