#include "spanel/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "spanel/error.hpp"
#include "spanel/panel_json.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "condition-encoder";

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, kModule, message);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string content_key(const VisualConcept& c) {
  VisualConcept anonymous = c;
  anonymous.id.clear();
  return concept_to_json(anonymous).dump();
}

}  // namespace

LatentGrid LatentGrid::from_image(int width, int height, int channels) {
  if (width <= 0 || height <= 0 || width % kLatentScale != 0 || height % kLatentScale != 0) {
    invalid("image dims must be positive multiples of 8, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels <= 0) invalid("channel count must be positive");
  return {height / kLatentScale, width / kLatentScale, channels};
}

std::vector<std::string> HashEmbedder::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
    if (!word.empty()) tokens.push_back(to_lower(word));
    i = j;
  }
  return tokens;
}

std::vector<float> HashEmbedder::token_vector(std::string_view token) const {
  std::mt19937_64 rng(fnv1a(token));
  std::vector<double> v(static_cast<std::size_t>(dim_));
  double norm = 0.0;
  for (auto& x : v) {
    x = 2.0 * unit_uniform(rng) - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(norm > 0 ? v[k] / norm : 0.0);
  return out;
}

std::vector<float> HashEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  std::vector<float> out(static_cast<std::size_t>(dim_), 0.0f);
  if (tokens.empty()) return out;
  for (const auto& t : tokens) {
    const auto v = token_vector(t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  for (auto& x : out) x /= static_cast<float>(tokens.size());
  return out;
}

EncoderWeights EncoderWeights::zeros(const EncoderConfig& config) {
  if (config.text_dim <= 0 || config.color_dim <= 0 || config.channels <= 0) invalid("encoder dims must be positive");
  EncoderWeights w;
  w.config = config;
  const auto c = static_cast<std::size_t>(config.channels);
  w.color_projection.assign(static_cast<std::size_t>(config.color_dim) * kPaletteSize, 0.0f);
  w.text_conv.assign(c * config.text_dim, 0.0f);
  w.color_conv.assign(c * config.color_dim, 0.0f);
  w.box_conv.assign(c, 0.0f);
  w.keypoint_conv.assign(c, 0.0f);
  w.merge_conv.assign(c * c * 9, 0.0f);
  return w;
}

EncoderWeights EncoderWeights::from_seed(const EncoderConfig& config, std::uint64_t seed) {
  EncoderWeights w = zeros(config);
  std::mt19937_64 rng(seed);
  for (auto* m : {&w.color_projection, &w.text_conv, &w.color_conv, &w.box_conv, &w.keypoint_conv, &w.merge_conv}) {
    for (auto& x : *m) x = static_cast<float>(unit_uniform(rng) - 0.5);
  }
  return w;
}

EncoderWeights EncoderWeights::identity(const EncoderConfig& config) {
  EncoderWeights w = zeros(config);
  for (int r = 0; r < std::min(config.color_dim, kPaletteSize); ++r) {
    w.color_projection[static_cast<std::size_t>(r) * kPaletteSize + r] = 1.0f;
  }
  for (int ch = 0; ch < config.channels; ++ch) {
    w.text_conv[static_cast<std::size_t>(ch) * config.text_dim + ch % config.text_dim] = 1.0f;
    w.color_conv[static_cast<std::size_t>(ch) * config.color_dim + ch % config.color_dim] = 1.0f;
    w.box_conv[ch] = 1.0f;
    w.keypoint_conv[ch] = 1.0f;
    w.merge_conv[((static_cast<std::size_t>(ch) * config.channels + ch) * 3 + 1) * 3 + 1] = 1.0f;
  }
  return w;
}

void EncoderWeights::check_shapes() const {
  const auto c = static_cast<std::size_t>(config.channels);
  if (config.text_dim <= 0 || config.color_dim <= 0 || config.channels <= 0) invalid("encoder dims must be positive");
  if (color_projection.size() != static_cast<std::size_t>(config.color_dim) * kPaletteSize ||
      text_conv.size() != c * config.text_dim || color_conv.size() != c * config.color_dim ||
      box_conv.size() != c || keypoint_conv.size() != c || merge_conv.size() != c * c * 9) {
    invalid("encoder weight shapes do not match their config");
  }
}

BinaryGrid encode_box_mask(const BoundingBox& box, const LatentGrid& grid) {
  return rasterize_box(box, grid.rows, grid.cols);
}

BinaryGrid encode_keypoint_heatmap(const KeypointSet& points, const LatentGrid& grid, double radius) {
  BinaryGrid heat(grid.rows, grid.cols, 0);
  const double r2 = radius * radius;
  for (const auto& p : points.points) {
    const double px = p.x * grid.cols;
    const double py = p.y * grid.rows;
    const int i0 = std::max(0, static_cast<int>(std::floor(py - radius - 1)));
    const int i1 = std::min(grid.rows - 1, static_cast<int>(std::ceil(py + radius + 1)));
    const int j0 = std::max(0, static_cast<int>(std::floor(px - radius - 1)));
    const int j1 = std::min(grid.cols - 1, static_cast<int>(std::ceil(px + radius + 1)));
    for (int i = i0; i <= i1; ++i) {
      const double dy = i + 0.5 - py;
      for (int j = j0; j <= j1; ++j) {
        const double dx = j + 0.5 - px;
        if (dx * dx + dy * dy <= r2) heat.at(i, j) = 1;
      }
    }
  }
  return heat;
}

std::vector<float> encode_color_vector(const ColorSet& colors, const EncoderWeights& weights) {
  const int d = weights.config.color_dim;
  std::vector<float> out(static_cast<std::size_t>(d), 0.0f);
  std::vector<std::uint8_t> indicator(kPaletteSize, 0);
  for (const auto& e : colors.entries) {
    if (e.index < 0 || e.index >= kPaletteSize) invalid("palette index out of range");
    indicator[e.index] = 1;
  }
  for (int r = 0; r < d; ++r) {
    float acc = 0.0f;
    const float* row = weights.color_projection.data() + static_cast<std::size_t>(r) * kPaletteSize;
    for (int k = 0; k < kPaletteSize; ++k) {
      if (indicator[k]) acc += row[k];
    }
    out[r] = acc;
  }
  return out;
}

namespace {

LatentTensor encode_object(const VisualConcept& vc, const LatentGrid& grid, const TextEmbedder& embedder,
                           const EncoderWeights& weights, bool* empty_box) {
  const int channels = grid.channels;
  const BinaryGrid box = encode_box_mask(vc.box, grid);
  const BinaryGrid heat = encode_keypoint_heatmap(vc.keypoints, grid);
  *empty_box = std::none_of(box.data.begin(), box.data.end(), [](auto v) { return v != 0; });

  const std::vector<float> text = embedder.embed(vc.description);
  const std::vector<float> color = encode_color_vector(vc.colors, weights);
  const auto& cfg = weights.config;

  // 1x1 convs applied to the broadcast 1D features reduce to per-channel scalars.
  std::vector<float> text_ch(channels, 0.0f);
  std::vector<float> color_ch(channels, 0.0f);
  for (int ch = 0; ch < channels; ++ch) {
    for (int k = 0; k < cfg.text_dim; ++k) text_ch[ch] += weights.text_conv[static_cast<std::size_t>(ch) * cfg.text_dim + k] * text[k];
    for (int k = 0; k < cfg.color_dim; ++k) color_ch[ch] += weights.color_conv[static_cast<std::size_t>(ch) * cfg.color_dim + k] * color[k];
  }

  LatentTensor summed(channels, grid.rows, grid.cols);
  for (int ch = 0; ch < channels; ++ch) {
    for (int i = 0; i < grid.rows; ++i) {
      for (int j = 0; j < grid.cols; ++j) {
        const float b = box.at(i, j);
        const float kp = heat.at(i, j);
        summed.at(ch, i, j) = (text_ch[ch] * b + color_ch[ch] * b) + weights.box_conv[ch] * b + weights.keypoint_conv[ch] * kp;
      }
    }
  }

  LatentTensor merged(channels, grid.rows, grid.cols);
  for (int o = 0; o < channels; ++o) {
    for (int i = 0; i < grid.rows; ++i) {
      for (int j = 0; j < grid.cols; ++j) {
        float acc = 0.0f;
        for (int c = 0; c < channels; ++c) {
          for (int dy = 0; dy < 3; ++dy) {
            const int y = i + dy - 1;
            if (y < 0 || y >= grid.rows) continue;
            for (int dx = 0; dx < 3; ++dx) {
              const int x = j + dx - 1;
              if (x < 0 || x >= grid.cols) continue;
              acc += weights.merge(o, c, dy, dx) * summed.at(c, y, x);
            }
          }
        }
        merged.at(o, i, j) = acc;
      }
    }
  }
  return merged;
}

}  // namespace

ConditionMap assemble_condition_map(const SemanticPanel& panel, const LatentGrid& grid, const TextEmbedder& embedder,
                                    const EncoderWeights& weights, bool keep_objects) {
  weights.check_shapes();
  if (weights.config.channels != grid.channels) {
    invalid("weights have " + std::to_string(weights.config.channels) + " channels, grid expects " +
            std::to_string(grid.channels));
  }
  if (weights.config.text_dim != embedder.dim()) invalid("embedder dim does not match the weights' text_dim");
  if (grid.rows <= 0 || grid.cols <= 0) invalid("latent grid must be non-empty");

  ConditionMap out;
  out.data = LatentTensor(grid.channels, grid.rows, grid.cols);
  const std::size_t n = panel.concepts.size();
  if (n == 0) return out;

  std::vector<ObjectCondition> objects(n);
  for (std::size_t k = 0; k < n; ++k) {
    objects[k].concept_id = panel.concepts[k].id;
    objects[k].map = encode_object(panel.concepts[k], grid, embedder, weights, &objects[k].empty_box_mask);
  }

  std::vector<std::string> keys(n);
  for (std::size_t k = 0; k < n; ++k) keys[k] = content_key(panel.concepts[k]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  for (std::size_t k : order) {
    const auto& m = objects[k].map.data;
    for (std::size_t e = 0; e < m.size(); ++e) out.data.data[e] += m[e];
  }
  const float count = static_cast<float>(n);
  for (auto& x : out.data.data) x /= count;

  if (keep_objects) out.objects = std::move(objects);
  return out;
}

TokenSpan locate_description_tokens(const std::vector<std::string>& prompt_tokens, std::string_view description,
                                    const TextEmbedder& embedder) {
  const int n = static_cast<int>(prompt_tokens.size());
  const auto needle = embedder.tokenize(description);
  const int m = static_cast<int>(needle.size());
  if (m > 0 && m <= n) {
    for (int s = 0; s + m <= n; ++s) {
      if (std::equal(needle.begin(), needle.end(), prompt_tokens.begin() + s)) return {s, s + m - 1, false};
    }
  }
  return {0, n - 1, true};
}

AttentionMask build_attention_mask(const SemanticPanel& panel, int patch_rows, int patch_cols,
                                   const std::vector<std::string>& prompt_tokens, const TextEmbedder& embedder) {
  if (patch_rows <= 0 || patch_cols <= 0) invalid("patch grid must be non-empty");
  AttentionMask mask;
  mask.patches = patch_rows * patch_cols;
  mask.tokens = static_cast<int>(prompt_tokens.size());
  mask.m.assign(static_cast<std::size_t>(mask.patches) * mask.tokens, 0);
  std::vector<std::uint8_t> restricted(static_cast<std::size_t>(mask.patches), 0);

  for (const auto& vc : panel.concepts) {
    ConceptAttention info;
    info.concept_id = vc.id;
    info.span = locate_description_tokens(prompt_tokens, vc.description, embedder);
    const BinaryGrid cover = rasterize_box(vc.box, patch_rows, patch_cols);
    for (int p = 0; p < mask.patches; ++p) {
      if (!cover.data[p]) continue;
      info.patches.push_back(p);
      restricted[p] = 1;
      for (int t = info.span.start; t <= info.span.end; ++t) mask.m[static_cast<std::size_t>(p) * mask.tokens + t] = 1;
    }
    mask.concepts.push_back(std::move(info));
  }
  for (int p = 0; p < mask.patches; ++p) {
    if (restricted[p]) continue;
    std::fill_n(mask.m.begin() + static_cast<std::ptrdiff_t>(p) * mask.tokens, mask.tokens, std::uint8_t{1});
  }
  return mask;
}

}  // namespace spanel
