#include "spanel/tensor_io.hpp"

#include <bit>
#include <cstdint>

#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "condition-encoder";

class Writer {
 public:
  explicit Writer(std::string_view magic) : out_(magic) {}
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void byte(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view magic) : bytes_(bytes) {
    if (bytes_.substr(0, 4) != magic) fail("bad magic, expected '" + std::string(magic) + "'");
    pos_ = 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_ + k])} << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::uint8_t byte() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("truncated data at byte " + std::to_string(pos_));
  }
  void finish() const {
    if (pos_ != bytes_.size()) fail("trailing bytes after payload");
  }
  [[noreturn]] void fail(const std::string& message) const { throw Error(ErrorCode::kParse, kModule, message); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_dim(Reader& r, const char* what) {
  const std::uint32_t v = r.u32();
  if (v > (1u << 24)) r.fail(std::string(what) + " is implausibly large");
  return v;
}

}  // namespace

std::string encode_condition(const LatentTensor& tensor) {
  Writer w("RANC");
  w.u32(kConditionFormatVersion);
  w.u32(static_cast<std::uint32_t>(tensor.channels));
  w.u32(static_cast<std::uint32_t>(tensor.rows));
  w.u32(static_cast<std::uint32_t>(tensor.cols));
  for (float x : tensor.data) w.f32(x);
  return w.take();
}

LatentTensor decode_condition(std::string_view bytes) {
  Reader r(bytes, "RANC");
  const std::uint32_t version = r.u32();
  if (version != kConditionFormatVersion) r.fail("unsupported RANC version " + std::to_string(version));
  const auto c = checked_dim(r, "C");
  const auto h = checked_dim(r, "H");
  const auto wd = checked_dim(r, "W");
  const std::uint64_t n = std::uint64_t{c} * h * wd;
  r.need(n * 4);
  LatentTensor t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(wd));
  for (auto& x : t.data) x = r.f32();
  r.finish();
  return t;
}

std::string encode_attention(const AttentionMask& mask) {
  Writer w("RANM");
  w.u32(static_cast<std::uint32_t>(mask.patches));
  w.u32(static_cast<std::uint32_t>(mask.tokens));
  const int row_bytes = (mask.tokens + 7) / 8;
  for (int p = 0; p < mask.patches; ++p) {
    for (int b = 0; b < row_bytes; ++b) {
      std::uint8_t v = 0;
      for (int k = 0; k < 8; ++k) {
        const int t = 8 * b + k;
        if (t < mask.tokens && mask.at(p, t)) v |= static_cast<std::uint8_t>(0x80u >> k);
      }
      w.byte(v);
    }
  }
  return w.take();
}

AttentionMask decode_attention(std::string_view bytes) {
  Reader r(bytes, "RANM");
  AttentionMask mask;
  mask.patches = static_cast<int>(checked_dim(r, "N_I"));
  mask.tokens = static_cast<int>(checked_dim(r, "N_T"));
  const int row_bytes = (mask.tokens + 7) / 8;
  r.need(static_cast<std::size_t>(row_bytes) * mask.patches);
  mask.m.assign(static_cast<std::size_t>(mask.patches) * mask.tokens, 0);
  for (int p = 0; p < mask.patches; ++p) {
    for (int b = 0; b < row_bytes; ++b) {
      const std::uint8_t v = r.byte();
      for (int k = 0; k < 8; ++k) {
        const int t = 8 * b + k;
        const bool bit = (v >> (7 - k)) & 1u;
        if (t < mask.tokens) {
          mask.m[static_cast<std::size_t>(p) * mask.tokens + t] = bit ? 1 : 0;
        } else if (bit) {
          r.fail("nonzero padding bit in RANM row " + std::to_string(p));
        }
      }
    }
  }
  r.finish();
  return mask;
}

std::string encode_weights(const EncoderWeights& weights) {
  weights.check_shapes();
  Writer w("RANW");
  w.u32(kWeightsFormatVersion);
  w.u32(static_cast<std::uint32_t>(weights.config.text_dim));
  w.u32(static_cast<std::uint32_t>(weights.config.color_dim));
  w.u32(static_cast<std::uint32_t>(weights.config.channels));
  w.u32(static_cast<std::uint32_t>(kPaletteSize));
  for (const auto* m : {&weights.color_projection, &weights.text_conv, &weights.color_conv, &weights.box_conv,
                        &weights.keypoint_conv, &weights.merge_conv}) {
    for (float x : *m) w.f32(x);
  }
  return w.take();
}

EncoderWeights decode_weights(std::string_view bytes) {
  Reader r(bytes, "RANW");
  const std::uint32_t version = r.u32();
  if (version != kWeightsFormatVersion) r.fail("unsupported RANW version " + std::to_string(version));
  EncoderConfig cfg;
  cfg.text_dim = static_cast<int>(checked_dim(r, "text_dim"));
  cfg.color_dim = static_cast<int>(checked_dim(r, "color_dim"));
  cfg.channels = static_cast<int>(checked_dim(r, "channels"));
  if (r.u32() != static_cast<std::uint32_t>(kPaletteSize)) r.fail("weights were built for a different palette size");
  if (cfg.text_dim == 0 || cfg.color_dim == 0 || cfg.channels == 0 || cfg.channels > 4096) r.fail("bad weight dims");
  EncoderWeights w = EncoderWeights::zeros(cfg);
  for (auto* m : {&w.color_projection, &w.text_conv, &w.color_conv, &w.box_conv, &w.keypoint_conv, &w.merge_conv}) {
    r.need(m->size() * 4);
    for (auto& x : *m) x = r.f32();
  }
  r.finish();
  return w;
}

}  // namespace spanel
