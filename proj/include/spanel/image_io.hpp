#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spanel/grid.hpp"
#include "spanel/palette.hpp"

namespace spanel {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// 8-bit grayscale PGM (P5); nonzero samples become 1.
BinaryGrid decode_pgm_mask(std::string_view bytes);
std::string encode_pgm(const BinaryGrid& mask);

RgbImage decode_ppm(std::string_view bytes);
std::string encode_ppm(const RgbImage& image);

RgbImage decode_png(std::string_view bytes);
std::string encode_png(const RgbImage& image);

// Dispatches on the file signature (P6 or PNG).
RgbImage decode_image(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace spanel
