#pragma once

#include "spanel/core.hpp"
#include "spanel/edit.hpp"
#include "spanel/image_io.hpp"

namespace spanel {

struct RenderConfig {
  int width = 512;
  int height = 512;
  int outline = 2;
  int dot_radius = 3;
  Rgb background{240, 240, 240};
  Rgb empty_fill{128, 128, 128};

  // Throws Error(kInvalidArgument) unless the dims are positive multiples of 8.
  void check() const;
};

// Pixel span [x0, x1) x [y0, y1) of the pixels whose centers lie in the box.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};

PixelRect box_pixels(const BoundingBox& box, int width, int height);

// 5x5 pattern from the description hash; bit (r * 5 + c) is row r, column c.
std::uint32_t glyph_bits(std::string_view description);

// Fill color: the palette color with the highest proportion (the first entry
// on ties or when proportions are absent), config.empty_fill without colors.
Rgb fill_color(const VisualConcept& vc, const RenderConfig& config);

// Black or white, whichever stands out against `fill`.
Rgb contrast_color(Rgb fill);

// Concepts are painted in panel order over the background: box fill, outline,
// description glyph, keypoint dots, everything clipped to the box.
RgbImage render_panel(const SemanticPanel& panel, const RenderConfig& config = {});

BinaryGrid upsample_mask(const BinaryGrid& mask, int factor);

// render(new) inside the editable region of the panel diff (latent scale,
// upsampled by 8), render(old) elsewhere.
RgbImage render_edit(const SemanticPanel& old_panel, const SemanticPanel& new_panel, const RenderConfig& config = {});

}  // namespace spanel
