#include "spanel/palette.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "color-palette";

// D65 reference white, sRGB primaries.
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;
constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

constexpr std::array<std::array<double, 3>, 3> kRgbToXyz = {{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};
constexpr std::array<std::array<double, 3>, 3> kXyzToRgb = {{
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
}};

double srgb_decode(std::uint8_t v) {
  const double c = v / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double linear) {
  return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double t) {
  const double cube = t * t * t;
  return cube > kEpsilon ? cube : (116.0 * t - 16.0) / kKappa;
}

std::uint8_t to_byte(double encoded) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(encoded, 0.0, 1.0) * 255.0));
}

}  // namespace

Lab srgb_to_lab(Rgb rgb) {
  const std::array<double, 3> lin = {srgb_decode(rgb.r), srgb_decode(rgb.g), srgb_decode(rgb.b)};
  std::array<double, 3> xyz{};
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
  }
  const double yr = xyz[1] / kWhiteY;
  const double fx = lab_f(xyz[0] / kWhiteX);
  const double fy = lab_f(yr);
  const double fz = lab_f(xyz[2] / kWhiteZ);
  const double l = yr > kEpsilon ? 116.0 * fy - 16.0 : kKappa * yr;
  return {l, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb lch_to_srgb(double lightness, double chroma, double hue_degrees) {
  const double hue = hue_degrees * std::numbers::pi / 180.0;
  const double a = chroma * std::cos(hue);
  const double b = chroma * std::sin(hue);
  const double fy = (lightness + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const std::array<double, 3> xyz = {kWhiteX * lab_f_inv(fx), kWhiteY * lab_f_inv(fy), kWhiteZ * lab_f_inv(fz)};
  std::array<std::uint8_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double lin = kXyzToRgb[i][0] * xyz[0] + kXyzToRgb[i][1] * xyz[1] + kXyzToRgb[i][2] * xyz[2];
    out[i] = to_byte(srgb_encode(std::clamp(lin, 0.0, 1.0)));
  }
  return {out[0], out[1], out[2]};
}

double delta_e2(const Lab& x, const Lab& y) {
  const double dl = x.l - y.l;
  const double da = x.a - y.a;
  const double db = x.b - y.b;
  return dl * dl + da * da + db * db;
}

Palette build_palette() {
  std::vector<PaletteEntry> entries;
  entries.reserve(kPaletteSize);
  for (int step = 0; step <= 5; ++step) {
    const Rgb rgb = lch_to_srgb(20.0 * step, 0.0, 0.0);
    entries.push_back({rgb, srgb_to_lab(rgb)});
  }
  constexpr std::array<double, 5> kLightness = {20, 35, 50, 65, 80};
  constexpr std::array<double, 3> kChroma = {20, 40, 60};
  for (double l : kLightness) {
    for (int h = 0; h < 10; ++h) {
      for (double c : kChroma) {
        const Rgb rgb = lch_to_srgb(l, c, 36.0 * h);
        entries.push_back({rgb, srgb_to_lab(rgb)});
      }
    }
  }
  return Palette(std::move(entries));
}

const Palette& default_palette() {
  static const Palette palette = build_palette();
  return palette;
}

std::string palette_to_table(const Palette& palette) {
  std::ostringstream out;
  out << "# spanel color palette v" << kPaletteTableVersion << "\n"
      << "# 156 entries: 6-step gray ramp (L* 0..100) then L* {20,35,50,65,80} x hue {0..324 step 36} x C* {20,40,60}\n"
      << "# sRGB -> CIELab: D65 white (0.95047, 1.0, 1.08883), sRGB transfer curve, eps 216/24389, kappa 24389/27\n"
      << "# columns: index, R, G, B, L, a, b\n";
  // Values that round to zero print without a sign.
  auto fixed4 = [](double v) { return std::abs(v) < 5e-5 ? 0.0 : v; };
  char line[128];
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const auto& e = palette[i];
    std::snprintf(line, sizeof line, "%zu, %d, %d, %d, %.4f, %.4f, %.4f\n", i, e.rgb.r, e.rgb.g, e.rgb.b,
                  fixed4(e.lab.l), fixed4(e.lab.a), fixed4(e.lab.b));
    out << line;
  }
  return out.str();
}

Palette palette_from_table(std::string_view text) {
  std::vector<PaletteEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    int index = 0;
    int r = 0;
    int g = 0;
    int b = 0;
    double l = 0;
    double a = 0;
    double bb = 0;
    const std::string locus = "line " + std::to_string(line_no);
    if (std::sscanf(t.c_str(), "%d , %d , %d , %d , %lf , %lf , %lf", &index, &r, &g, &b, &l, &a, &bb) != 7) {
      throw Error(ErrorCode::kParse, kModule, "expected 'index, R, G, B, L, a, b'", locus);
    }
    if (index != static_cast<int>(entries.size())) {
      throw Error(ErrorCode::kParse, kModule, "palette indices must be consecutive from 0", locus);
    }
    if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) {
      throw Error(ErrorCode::kParse, kModule, "RGB component outside [0,255]", locus);
    }
    const Rgb rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
    const Lab lab = srgb_to_lab(rgb);
    if (std::abs(lab.l - l) > 1e-3 || std::abs(lab.a - a) > 1e-3 || std::abs(lab.b - bb) > 1e-3) {
      throw Error(ErrorCode::kParse, kModule, "Lab columns disagree with RGB", locus);
    }
    entries.push_back({rgb, lab});
  }
  if (entries.size() != static_cast<std::size_t>(kPaletteSize)) {
    throw Error(ErrorCode::kParse, kModule,
                "palette must have " + std::to_string(kPaletteSize) + " entries, got " + std::to_string(entries.size()));
  }
  return Palette(std::move(entries));
}

int quantize_pixel(Rgb rgb, const Palette& palette) {
  const Lab lab = srgb_to_lab(rgb);
  int best = 0;
  double best_d = delta_e2(lab, palette[0].lab);
  for (std::size_t i = 1; i < palette.size(); ++i) {
    const double d = delta_e2(lab, palette[i].lab);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

ColorSet extract_colors(std::span<const Rgb> region, const Palette& palette) {
  if (region.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "region has no pixels");
  std::vector<std::size_t> counts(palette.size(), 0);
  std::unordered_map<std::uint32_t, int> memo;
  for (const Rgb& px : region) {
    const std::uint32_t key = (std::uint32_t{px.r} << 16) | (std::uint32_t{px.g} << 8) | px.b;
    auto [it, inserted] = memo.try_emplace(key, 0);
    if (inserted) it->second = quantize_pixel(px, palette);
    ++counts[static_cast<std::size_t>(it->second)];
  }
  const std::size_t total = region.size();
  std::vector<int> kept;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    // proportion > 5%, in exact integer arithmetic
    if (counts[i] * 20 > total) kept.push_back(static_cast<int>(i));
  }
  std::stable_sort(kept.begin(), kept.end(), [&](int x, int y) { return counts[x] > counts[y]; });
  if (kept.size() > kMaxColors) kept.resize(kMaxColors);

  ColorSet out;
  for (int i : kept) {
    out.entries.push_back({i, static_cast<double>(counts[i]) / static_cast<double>(total)});
  }
  return out;
}

}  // namespace spanel
