#include <doctest.h>

#include <cstring>
#include <random>

#include "spanel/error.hpp"
#include "spanel/tensor_io.hpp"
#include "support.hpp"

using namespace spanel;

namespace {

std::uint32_t u32_at(const std::string& s, std::size_t pos) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(s[pos + k]);
  return v;
}

}  // namespace

TEST_SUITE("tensor_io") {

TEST_CASE("condition tensor round trip is bit exact") {
  std::mt19937_64 rng(2);
  LatentTensor t(3, 5, 7);
  for (auto& x : t.data) x = static_cast<float>(testing::uniform(rng, -10, 10));
  t.data[0] = -0.0f;
  t.data[1] = 1e-42f;
  const std::string bytes = encode_condition(t);
  CHECK(bytes.size() == 20 + 4 * t.data.size());
  CHECK(bytes.substr(0, 4) == "RANC");
  CHECK(u32_at(bytes, 4) == 1);
  CHECK(u32_at(bytes, 8) == 3);
  CHECK(u32_at(bytes, 12) == 5);
  CHECK(u32_at(bytes, 16) == 7);
  const LatentTensor back = decode_condition(bytes);
  REQUIRE(back.data.size() == t.data.size());
  CHECK(std::memcmp(back.data.data(), t.data.data(), 4 * t.data.size()) == 0);
  CHECK(encode_condition(back) == bytes);
}

TEST_CASE("corrupt condition files are rejected") {
  const std::string bytes = encode_condition(LatentTensor(1, 2, 2, 1.0f));
  CHECK(testing::error_code_of([&] { decode_condition(bytes.substr(0, bytes.size() - 1)); }) == ErrorCode::kParse);
  CHECK(testing::error_code_of([&] { decode_condition("XANC" + bytes.substr(4)); }) == ErrorCode::kParse);
  std::string v2 = bytes;
  v2[4] = 2;
  CHECK(testing::error_code_of([&] { decode_condition(v2); }) == ErrorCode::kParse);
  CHECK(testing::error_code_of([&] { decode_condition(bytes + "x"); }) == ErrorCode::kParse);
}

TEST_CASE("attention mask bit order") {
  AttentionMask m;
  m.patches = 2;
  m.tokens = 10;
  m.m.assign(20, 0);
  m.m[0] = 1;       // patch 0, token 0 -> byte 0 bit 7
  m.m[9] = 1;       // patch 0, token 9 -> byte 1 bit 6
  m.m[10 + 7] = 1;  // patch 1, token 7 -> byte 0 bit 0
  const std::string bytes = encode_attention(m);
  REQUIRE(bytes.size() == 12 + 2 * 2);
  CHECK(bytes.substr(0, 4) == "RANM");
  CHECK(static_cast<unsigned char>(bytes[12]) == 0x80);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0x40);
  CHECK(static_cast<unsigned char>(bytes[14]) == 0x01);
  CHECK(static_cast<unsigned char>(bytes[15]) == 0x00);
  const AttentionMask back = decode_attention(bytes);
  CHECK(back.m == m.m);
  CHECK(testing::error_code_of([&] { decode_attention(bytes.substr(0, 14)); }) == ErrorCode::kParse);
}

TEST_CASE("weights round trip") {
  const EncoderWeights w = EncoderWeights::from_seed({8, 4, 2}, 5);
  const EncoderWeights back = decode_weights(encode_weights(w));
  CHECK(back == w);
  std::string bytes = encode_weights(w);
  bytes[20] = 100;  // palette size field
  CHECK(testing::error_code_of([&] { decode_weights(bytes); }) == ErrorCode::kParse);
}

}
