#pragma once

#include <string>
#include <string_view>

#include "spanel/edit.hpp"
#include "spanel/encoder.hpp"

namespace spanel {

// All formats are little-endian.
//
// RANC  condition tensor: "RANC", u32 version (1), u32 C, u32 H, u32 W,
//       then C*H*W float32 in row-major (channel, row, col) order.
// RANM  attention mask:   "RANM", u32 N_I, u32 N_T, then N_I rows of
//       ceil(N_T / 8) bytes; token t of a row is bit (7 - t % 8) of byte t / 8.
// RANW  encoder weights:  "RANW", u32 version (1), u32 text_dim,
//       u32 color_dim, u32 channels, u32 palette size (156), then float32
//       color_projection, text_conv, color_conv, box_conv, keypoint_conv,
//       merge_conv.
inline constexpr std::uint32_t kConditionFormatVersion = 1;
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

std::string encode_condition(const LatentTensor& tensor);
LatentTensor decode_condition(std::string_view bytes);

std::string encode_attention(const AttentionMask& mask);
// Restores the matrix only; per-concept spans are not part of the format.
AttentionMask decode_attention(std::string_view bytes);

std::string encode_weights(const EncoderWeights& weights);
EncoderWeights decode_weights(std::string_view bytes);

}  // namespace spanel
