#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spanel/core.hpp"

namespace spanel {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// sRGB (D65, IEC 61966-2-1 transfer curve) to CIELab.
Lab srgb_to_lab(Rgb rgb);
// CIE LCh(ab) to sRGB; out-of-gamut channels are clipped to [0, 255].
Rgb lch_to_srgb(double lightness, double chroma, double hue_degrees);
// Squared CIE76 color difference.
double delta_e2(const Lab& x, const Lab& y);

struct PaletteEntry {
  Rgb rgb;
  Lab lab;
};

class Palette {
 public:
  Palette() = default;
  explicit Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {}

  std::size_t size() const { return entries_.size(); }
  const PaletteEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<PaletteEntry>& entries() const { return entries_; }

 private:
  std::vector<PaletteEntry> entries_;
};

inline constexpr int kPaletteTableVersion = 1;

// Index 0..5: grayscale ramp L* = 0, 20, ..., 100 (0 is black, 5 is white).
// Index 6..155: L* in {20,35,50,65,80} x hue in {0,36,...,324} x chroma in
// {20,40,60}, enumerated lightness-major then hue then chroma.
Palette build_palette();
const Palette& default_palette();

// Text table, one line per entry: "index, R, G, B, L, a, b". Lines starting
// with '#' are comments. RGB is authoritative; Lab is recomputed on load and
// must agree with the stored columns to 1e-3.
std::string palette_to_table(const Palette& palette);
Palette palette_from_table(std::string_view text);

// Argmin of CIE76 distance, ties to the lowest index.
int quantize_pixel(Rgb rgb, const Palette& palette = default_palette());

// Main colors of a masked region: indices covering more than 5% of the pixels,
// at most 6, ordered by frequency (ties to the lower index).
ColorSet extract_colors(std::span<const Rgb> region, const Palette& palette = default_palette());

}  // namespace spanel
