#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "spanel/core.hpp"
#include "spanel/edit.hpp"
#include "spanel/grid.hpp"

namespace spanel {

inline constexpr int kLatentScale = 8;

// Latent spatial layout: image dims / 8, plus the condition channel count.
struct LatentGrid {
  int rows = 0;
  int cols = 0;
  int channels = 0;

  // Throws Error(kInvalidArgument) unless both dims are positive multiples of 8.
  static LatentGrid from_image(int width, int height, int channels);
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  // Global sentence embedding.
  virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Deterministic stand-in for a pretrained text encoder. Tokens are the
// lowercased whitespace-separated words with surrounding ASCII punctuation
// stripped; each token hashes (FNV-1a) to a seed for a unit vector, and the
// sentence embedding is the mean of its token vectors.
class HashEmbedder final : public TextEmbedder {
 public:
  explicit HashEmbedder(int dim = 32) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::vector<float> embed(std::string_view text) const override;
  std::vector<float> token_vector(std::string_view token) const;

 private:
  int dim_;
};

struct EncoderConfig {
  int text_dim = 32;
  int color_dim = 16;
  int channels = 4;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Forward-only weights of the panel encoder. All matrices row-major.
//   color_projection  color_dim x 156   (indicator -> color feature)
//   text_conv         channels x text_dim   1x1 conv on the broadcast text embedding
//   color_conv        channels x color_dim  1x1 conv on the broadcast color feature
//   box_conv          channels x 1          1x1 conv on the box mask
//   keypoint_conv     channels x 1          1x1 conv on the keypoint heatmap
//   merge_conv        channels x channels x 3 x 3, zero padded
struct EncoderWeights {
  EncoderConfig config;
  std::vector<float> color_projection;
  std::vector<float> text_conv;
  std::vector<float> color_conv;
  std::vector<float> box_conv;
  std::vector<float> keypoint_conv;
  std::vector<float> merge_conv;

  static EncoderWeights zeros(const EncoderConfig& config);
  // Uniform in [-0.5, 0.5) from a 64-bit Mersenne Twister.
  static EncoderWeights from_seed(const EncoderConfig& config, std::uint64_t seed);
  // Every 1x1 map routes input k to channel k (mod its width), the color
  // projection is a truncated identity, and the merge conv is the identity.
  static EncoderWeights identity(const EncoderConfig& config);

  // Throws Error(kInvalidArgument) when a matrix does not match the config.
  void check_shapes() const;

  float merge(int out_ch, int in_ch, int dy, int dx) const {
    return merge_conv[((static_cast<std::size_t>(out_ch) * config.channels + in_ch) * 3 + dy) * 3 + dx];
  }

  friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

BinaryGrid encode_box_mask(const BoundingBox& box, const LatentGrid& grid);

// 1 at every cell whose center is within `radius` cells of a keypoint mapped
// to latent coordinates (x * cols, y * rows).
BinaryGrid encode_keypoint_heatmap(const KeypointSet& points, const LatentGrid& grid, double radius = 6.0);

// projection x (156-dim indicator of the color indices).
std::vector<float> encode_color_vector(const ColorSet& colors, const EncoderWeights& weights);

struct ObjectCondition {
  std::string concept_id;
  LatentTensor map;
  bool empty_box_mask = false;  // the box covers no latent cell center
};

struct ConditionMap {
  LatentTensor data;
  std::vector<ObjectCondition> objects;  // panel order
};

// Per object: text and color features broadcast over the box mask, box mask
// and keypoint heatmap through their 1x1 convs, summed, then the 3x3 merge.
// The final map is the mean over objects (zero for an empty panel). Objects
// are accumulated in a canonical content order, so the result does not
// depend on concept order.
ConditionMap assemble_condition_map(const SemanticPanel& panel, const LatentGrid& grid, const TextEmbedder& embedder,
                                    const EncoderWeights& weights, bool keep_objects = true);

struct TokenSpan {
  int start = 0;  // inclusive
  int end = -1;   // inclusive
  bool fallback = false;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// First occurrence of the description's token sequence inside the prompt
// tokens. No match (or an empty description) yields the whole prompt with
// fallback set.
TokenSpan locate_description_tokens(const std::vector<std::string>& prompt_tokens, std::string_view description,
                                    const TextEmbedder& embedder);

struct ConceptAttention {
  std::string concept_id;
  TokenSpan span;
  std::vector<int> patches;
};

struct AttentionMask {
  int patches = 0;
  int tokens = 0;
  std::vector<std::uint8_t> m;  // patches x tokens, row-major
  std::vector<ConceptAttention> concepts;

  std::uint8_t at(int patch, int token) const { return m[static_cast<std::size_t>(patch) * tokens + token]; }
};

// Patches whose center lies in a concept's box attend only to the union of
// the token spans of the concepts covering them; all other patches keep an
// unrestricted all-ones row.
AttentionMask build_attention_mask(const SemanticPanel& panel, int patch_rows, int patch_cols,
                                   const std::vector<std::string>& prompt_tokens, const TextEmbedder& embedder);

}  // namespace spanel
