#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "spanel/error.hpp"
#include "spanel/render.hpp"
#include "support.hpp"

using namespace spanel;

namespace {

// Latent cells touched by any concept that differs between the panels,
// computed from concept equality rather than the library diff.
BinaryGrid changed_cells(const SemanticPanel& a, const SemanticPanel& b, int rows, int cols) {
  std::vector<BoundingBox> boxes;
  for (const auto& c : a.concepts) {
    const VisualConcept* other = b.find(c.id);
    if (!other || !(*other == c)) boxes.push_back(c.box);
    if (other && !(*other == c)) boxes.push_back(other->box);
  }
  for (const auto& c : b.concepts) {
    if (!a.find(c.id)) boxes.push_back(c.box);
  }
  BinaryGrid m(rows, cols, 0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      for (const auto& box : boxes) {
        if (oracle::center_in_box(box, (j + 0.5) / cols, (i + 0.5) / rows)) m.at(i, j) = 1;
      }
    }
  }
  return m;
}

VisualConcept full_black() {
  VisualConcept vc;
  vc.id = "c0_1";
  vc.description = "slab";
  vc.box = {0.5, 0.5, 1.0, 1.0};
  vc.colors.entries = {{0, std::nullopt}};
  return vc;
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("an empty panel is background") {
  const RgbImage img = render_panel({});
  CHECK(img.width == 512);
  CHECK(img.height == 512);
  for (const Rgb& px : img.pixels) REQUIRE(px == Rgb{240, 240, 240});
}

TEST_CASE("fill, outline and glyph placement") {
  SemanticPanel p;
  p.concepts = {full_black()};
  const RgbImage img = render_panel(p);
  CHECK(img.at(10, 10) == Rgb{0, 0, 0});
  CHECK(img.at(0, 0) == Rgb{255, 255, 255});
  CHECK(img.at(511, 300) == Rgb{255, 255, 255});
  // glyph cells are 51 px wide, starting at 128
  const std::uint32_t bits = glyph_bits("slab");
  for (int row = 0; row < 5; ++row) {
    for (int col = 0; col < 5; ++col) {
      const bool on = (bits >> (row * 5 + col)) & 1u;
      CHECK(img.at(128 + col * 51 + 25, 128 + row * 51 + 25) == (on ? Rgb{255, 255, 255} : Rgb{0, 0, 0}));
    }
  }
}

TEST_CASE("fill picks the largest proportion") {
  VisualConcept vc = full_black();
  RenderConfig cfg;
  vc.colors.entries = {{0, 0.3}, {5, 0.7}};
  CHECK(fill_color(vc, cfg) == default_palette()[5].rgb);
  vc.colors.entries = {{7, std::nullopt}, {5, std::nullopt}};
  CHECK(fill_color(vc, cfg) == default_palette()[7].rgb);
  vc.colors.entries.clear();
  CHECK(fill_color(vc, cfg) == cfg.empty_fill);
}

TEST_CASE("rendering is deterministic") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    const SemanticPanel p = testing::random_panel(rng);
    CHECK(render_panel(p) == render_panel(p));
  }
}

TEST_CASE("render_edit of identical panels is the plain render") {
  std::mt19937_64 rng(13);
  RenderConfig cfg;
  cfg.width = cfg.height = 128;
  for (int t = 0; t < 5; ++t) {
    const SemanticPanel p = testing::random_panel(rng);
    CHECK(render_edit(p, p, cfg) == render_panel(p, cfg));
  }
}

TEST_CASE("render_edit keeps pixels outside the edited region") {
  std::mt19937_64 rng(14);
  RenderConfig cfg;
  cfg.width = 128;
  cfg.height = 96;
  for (int t = 0; t < 20; ++t) {
    const SemanticPanel a = testing::random_panel(rng, 2, 4);
    SemanticPanel b = a;
    b.concepts[0].box.xc = std::clamp(1.0 - b.concepts[0].box.xc, b.concepts[0].box.w / 2, 1 - b.concepts[0].box.w / 2);
    const RgbImage ra = render_panel(a, cfg), rb = render_panel(b, cfg), re = render_edit(a, b, cfg);
    const BinaryGrid m = changed_cells(a, b, cfg.height / 8, cfg.width / 8);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        REQUIRE(re.at(x, y) == (m.at(y / 8, x / 8) ? rb.at(x, y) : ra.at(x, y)));
      }
    }
  }
}

TEST_CASE("removing a full-frame concept gives the new render") {
  SemanticPanel a;
  a.concepts = {full_black()};
  const SemanticPanel b;
  CHECK(render_edit(a, b) == render_panel(b));
}

TEST_CASE("render config checks") {
  RenderConfig cfg;
  cfg.width = 100;
  CHECK(testing::error_code_of([&] { cfg.check(); }) == ErrorCode::kInvalidArgument);
  cfg.width = 0;
  CHECK(testing::error_code_of([&] { render_panel({}, cfg); }) == ErrorCode::kInvalidArgument);
  cfg.width = 64;
  cfg.outline = -1;
  CHECK(testing::error_code_of([&] { cfg.check(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("mask upsampling") {
  BinaryGrid m(2, 3, 0);
  m.at(1, 2) = 1;
  const BinaryGrid u = upsample_mask(m, 4);
  CHECK(u.rows == 8);
  CHECK(u.cols == 12);
  int on = 0;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 12; ++j) {
      on += u.at(i, j);
      if (u.at(i, j)) CHECK((i >= 4 && j >= 8));
    }
  }
  CHECK(on == 16);
}

}
