#include "spanel/render.hpp"

#include <algorithm>

#include "spanel/encoder.hpp"
#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr int kGlyphSize = 5;

std::pair<int, int> span(double lo, double hi, int n) {
  int a = n;
  int b = 0;
  for (int k = 0; k < n; ++k) {
    const double c = (k + 0.5) / n;
    if (c >= lo && c < hi) {
      a = std::min(a, k);
      b = k + 1;
    }
  }
  return {a, std::max(a, b)};
}

}  // namespace

void RenderConfig::check() const {
  if (width <= 0 || height <= 0 || width % kLatentScale != 0 || height % kLatentScale != 0) {
    throw Error(ErrorCode::kInvalidArgument, "toy-renderer",
                "render size " + std::to_string(width) + "x" + std::to_string(height) +
                    " must be positive multiples of 8");
  }
  if (outline < 0 || dot_radius < 0) {
    throw Error(ErrorCode::kInvalidArgument, "toy-renderer", "outline and dot radius must be non-negative");
  }
}

PixelRect box_pixels(const BoundingBox& box, int width, int height) {
  const Corners c = box_corners(box);
  const auto [x0, x1] = span(c.x1, c.x2, width);
  const auto [y0, y1] = span(c.y1, c.y2, height);
  return {x0, y0, x1, y1};
}

std::uint32_t glyph_bits(std::string_view description) {
  return static_cast<std::uint32_t>(fnv1a(description) & ((1u << (kGlyphSize * kGlyphSize)) - 1));
}

Rgb fill_color(const VisualConcept& vc, const RenderConfig& config) {
  const auto& entries = vc.colors.entries;
  if (entries.empty()) return config.empty_fill;
  std::size_t best = 0;
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].proportion.value_or(0.0) > entries[best].proportion.value_or(0.0)) best = k;
  }
  return default_palette()[entries[best].index].rgb;
}

Rgb contrast_color(Rgb fill) {
  const int luma = 299 * fill.r + 587 * fill.g + 114 * fill.b;
  return luma >= 128000 ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
}

RgbImage render_panel(const SemanticPanel& panel, const RenderConfig& config) {
  config.check();
  RgbImage image(config.width, config.height, config.background);
  for (const auto& vc : panel.concepts) {
    const PixelRect r = box_pixels(vc.box, config.width, config.height);
    if (r.empty()) continue;
    const Rgb fill = fill_color(vc, config);
    const Rgb ink = contrast_color(fill);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const bool edge = x - r.x0 < config.outline || r.x1 - 1 - x < config.outline || y - r.y0 < config.outline ||
                          r.y1 - 1 - y < config.outline;
        image.at(x, y) = edge ? ink : fill;
      }
    }

    const int cell = std::max(1, std::min(r.x1 - r.x0, r.y1 - r.y0) / (2 * kGlyphSize));
    const int gx = (r.x0 + r.x1 - kGlyphSize * cell) / 2;
    const int gy = (r.y0 + r.y1 - kGlyphSize * cell) / 2;
    const std::uint32_t bits = glyph_bits(vc.description);
    for (int row = 0; row < kGlyphSize; ++row) {
      for (int col = 0; col < kGlyphSize; ++col) {
        if (!((bits >> (row * kGlyphSize + col)) & 1u)) continue;
        for (int y = gy + row * cell; y < gy + (row + 1) * cell; ++y) {
          for (int x = gx + col * cell; x < gx + (col + 1) * cell; ++x) {
            if (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1) image.at(x, y) = ink;
          }
        }
      }
    }

    const double rad2 = static_cast<double>(config.dot_radius) * config.dot_radius;
    for (const Point2& p : vc.keypoints.points) {
      const double px = p.x * config.width;
      const double py = p.y * config.height;
      for (int y = r.y0; y < r.y1; ++y) {
        const double dy = y + 0.5 - py;
        if (dy * dy > rad2) continue;
        for (int x = r.x0; x < r.x1; ++x) {
          const double dx = x + 0.5 - px;
          if (dx * dx + dy * dy <= rad2) image.at(x, y) = ink;
        }
      }
    }
  }
  return image;
}

BinaryGrid upsample_mask(const BinaryGrid& mask, int factor) {
  BinaryGrid out(mask.rows * factor, mask.cols * factor, 0);
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) out.at(i, j) = mask.at(i / factor, j / factor);
  }
  return out;
}

RgbImage render_edit(const SemanticPanel& old_panel, const SemanticPanel& new_panel, const RenderConfig& config) {
  config.check();
  const BinaryGrid latent = editable_region_mask(diff_panels(old_panel, new_panel), config.height / kLatentScale,
                                                 config.width / kLatentScale);
  const BinaryGrid mask = upsample_mask(latent, kLatentScale);
  RgbImage out = render_panel(old_panel, config);
  if (std::none_of(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; })) return out;
  const RgbImage fresh = render_panel(new_panel, config);
  for (std::size_t k = 0; k < out.pixels.size(); ++k) {
    if (mask.data[k]) out.pixels[k] = fresh.pixels[k];
  }
  return out;
}

}  // namespace spanel
