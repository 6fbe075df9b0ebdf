#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spanel/encoder.hpp"
#include "spanel/error.hpp"
#include "support.hpp"

using namespace spanel;

namespace {

VisualConcept object(const std::string& id, const std::string& desc, BoundingBox box) {
  VisualConcept c;
  c.id = id;
  c.description = desc;
  c.box = box;
  return c;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("latent grid needs multiples of eight") {
  const LatentGrid g = LatentGrid::from_image(512, 256, 4);
  CHECK(g.rows == 32);
  CHECK(g.cols == 64);
  CHECK(testing::error_code_of([] { LatentGrid::from_image(500, 512, 4); }) == ErrorCode::kInvalidArgument);
  CHECK(testing::error_code_of([] { LatentGrid::from_image(0, 512, 4); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("box mask covers the box cells") {
  const BinaryGrid m = encode_box_mask({0.5, 0.5, 0.5, 0.5}, {8, 8, 4});
  int n = 0;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      n += m.at(i, j);
      CHECK(m.at(i, j) == ((i >= 2 && i < 6 && j >= 2 && j < 6) ? 1 : 0));
    }
  }
  CHECK(n == 16);
}

TEST_CASE("keypoint heatmap is a disk") {
  const LatentGrid g{16, 16, 4};
  const BinaryGrid h = encode_keypoint_heatmap({{{0.5, 0.5}}}, g, 3.0);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const double dx = j + 0.5 - 8.0, dy = i + 0.5 - 8.0;
      CHECK(h.at(i, j) == (dx * dx + dy * dy <= 9.0 ? 1 : 0));
    }
  }
  const BinaryGrid none = encode_keypoint_heatmap({}, g);
  CHECK(std::count(none.data.begin(), none.data.end(), 1) == 0);
}

TEST_CASE("color vector sums projection columns") {
  const EncoderWeights w = EncoderWeights::from_seed({}, 4);
  const ColorSet a{{{3, std::nullopt}}};
  const ColorSet b{{{77, std::nullopt}}};
  const ColorSet ab{{{3, std::nullopt}, {77, std::nullopt}}};
  const auto va = encode_color_vector(a, w), vb = encode_color_vector(b, w), vab = encode_color_vector(ab, w);
  for (int r = 0; r < w.config.color_dim; ++r) {
    CHECK(va[r] == w.color_projection[r * kPaletteSize + 3]);
    CHECK(vab[r] == doctest::Approx(va[r] + vb[r]));
  }
}

TEST_CASE("tokenizer lowercases and strips punctuation") {
  const HashEmbedder e;
  const std::vector<std::string> expected = {"a", "red", "apple", "next", "to", "it's", "mushroom"};
  CHECK(e.tokenize("  A red, apple next to (it's) mushroom. ") == expected);
  CHECK(e.embed("Apple") == e.embed("apple!"));
  CHECK(e.embed("") == std::vector<float>(32, 0.0f));
}

TEST_CASE("description tokens are located in the prompt") {
  const HashEmbedder e;
  const auto tokens = e.tokenize("a red apple and a red ball");
  CHECK(locate_description_tokens(tokens, "red ball", e) == TokenSpan{5, 6, false});
  CHECK(locate_description_tokens(tokens, "Red", e) == TokenSpan{1, 1, false});
  CHECK(locate_description_tokens(tokens, "green pear", e) == TokenSpan{0, 6, true});
  CHECK(locate_description_tokens(tokens, "", e) == TokenSpan{0, 6, true});
}

TEST_CASE("condition map is invariant to concept order") {
  std::mt19937_64 rng(21);
  const HashEmbedder e;
  const EncoderWeights w = EncoderWeights::from_seed({}, 9);
  const LatentGrid g{8, 8, 4};
  for (int t = 0; t < 30; ++t) {
    SemanticPanel p = testing::random_panel(rng, 1, 5);
    const ConditionMap a = assemble_condition_map(p, g, e, w);
    std::shuffle(p.concepts.begin(), p.concepts.end(), rng);
    const ConditionMap b = assemble_condition_map(p, g, e, w);
    CHECK(a.data == b.data);
  }
}

TEST_CASE("condition map is the mean of object maps") {
  std::mt19937_64 rng(8);
  const HashEmbedder e;
  const EncoderWeights w = EncoderWeights::from_seed({}, 1);
  const LatentGrid g{8, 12, 4};
  const SemanticPanel p = testing::random_panel(rng, 3, 3);
  const ConditionMap c = assemble_condition_map(p, g, e, w);
  REQUIRE(c.objects.size() == 3);
  for (std::size_t k = 0; k < c.data.data.size(); ++k) {
    const double mean =
        (double(c.objects[0].map.data[k]) + c.objects[1].map.data[k] + c.objects[2].map.data[k]) / 3.0;
    CHECK(c.data.data[k] == doctest::Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("empty panel gives zeros") {
  const HashEmbedder e;
  const ConditionMap c = assemble_condition_map({}, {4, 4, 4}, e, EncoderWeights::from_seed({}, 0));
  CHECK(c.data == LatentTensor(4, 4, 4));
  CHECK(c.objects.empty());
}

TEST_CASE("identity weights expose the inputs") {
  // With identity weights channel k of a lone object is
  // text[k] * box + color[k] * box + box + heat.
  const HashEmbedder e;
  const EncoderWeights w = EncoderWeights::identity({});
  const LatentGrid g{8, 8, 4};
  SemanticPanel p;
  p.concepts.push_back(object("c0_1", "blue ball", {0.5, 0.5, 0.5, 0.5}));
  p.concepts[0].colors.entries = {{2, std::nullopt}};
  p.concepts[0].keypoints.points = {{0.5, 0.5}};
  const ConditionMap c = assemble_condition_map(p, g, e, w);
  const auto text = e.embed("blue ball");
  const BinaryGrid box = encode_box_mask(p.concepts[0].box, g);
  const BinaryGrid heat = encode_keypoint_heatmap(p.concepts[0].keypoints, g);
  for (int ch = 0; ch < 4; ++ch) {
    const float color = ch == 2 ? 1.0f : 0.0f;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        const float b = box.at(i, j);
        const float expected = (text[ch] * b + color * b) + b + heat.at(i, j);
        CHECK(c.data.at(ch, i, j) == doctest::Approx(expected).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("mismatched weights are rejected") {
  const HashEmbedder e(16);
  CHECK(testing::error_code_of([&] {
          assemble_condition_map({}, {4, 4, 4}, e, EncoderWeights::from_seed({}, 0));
        }) == ErrorCode::kInvalidArgument);
  CHECK(testing::error_code_of([&] {
          assemble_condition_map({}, {4, 4, 3}, HashEmbedder(), EncoderWeights::from_seed({}, 0));
        }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("attention on a 2x2 grid") {
  const HashEmbedder e;
  SemanticPanel p;
  p.prompt = "a red apple next to a dog";
  p.concepts.push_back(object("c0_1", "red apple", {0.25, 0.5, 0.5, 1.0}));
  p.concepts.push_back(object("c0_2", "dog", {0.75, 0.25, 0.5, 0.5}));
  const auto tokens = e.tokenize(p.prompt);
  const AttentionMask m = build_attention_mask(p, 2, 2, tokens, e);
  REQUIRE(m.patches == 4);
  REQUIRE(m.tokens == 7);
  const std::uint8_t expected[4][7] = {
      {0, 1, 1, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 1},
      {0, 1, 1, 0, 0, 0, 0},
      {1, 1, 1, 1, 1, 1, 1},
  };
  for (int q = 0; q < 4; ++q) {
    for (int t = 0; t < 7; ++t) CHECK(m.at(q, t) == expected[q][t]);
  }
  REQUIRE(m.concepts.size() == 2);
  CHECK(m.concepts[0].patches == std::vector<int>{0, 2});
}

TEST_CASE("overlapping concepts share a patch") {
  const HashEmbedder e;
  SemanticPanel p;
  p.prompt = "cat and dog";
  p.concepts.push_back(object("c0_1", "cat", {0.5, 0.5, 1.0, 1.0}));
  p.concepts.push_back(object("c0_2", "dog", {0.5, 0.5, 1.0, 1.0}));
  const AttentionMask m = build_attention_mask(p, 2, 2, e.tokenize(p.prompt), e);
  for (int q = 0; q < 4; ++q) {
    CHECK(m.at(q, 0) == 1);
    CHECK(m.at(q, 1) == 0);
    CHECK(m.at(q, 2) == 1);
  }
}

TEST_CASE("attention matches the per-cell oracle") {
  std::mt19937_64 rng(12);
  const HashEmbedder e;
  for (int grid : {2, 4, 8}) {
    for (int t = 0; t < 50; ++t) {
      SemanticPanel p = testing::random_panel(rng, 1, 4);
      p.prompt = "a small red apple and a wooden chair near a blue dog and a tree";
      const auto tokens = e.tokenize(p.prompt);
      std::vector<std::vector<std::string>> desc;
      for (const auto& c : p.concepts) desc.push_back(e.tokenize(c.description));
      const AttentionMask m = build_attention_mask(p, grid, grid, tokens, e);
      for (int q = 0; q < grid * grid; ++q) {
        for (int k = 0; k < m.tokens; ++k) {
          REQUIRE(m.at(q, k) == oracle::attention(p, desc, grid, grid, q, k, tokens));
        }
      }
    }
  }
}

}
