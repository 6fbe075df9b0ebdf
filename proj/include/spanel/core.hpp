#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spanel/grid.hpp"

namespace spanel {

inline constexpr int kPaletteSize = 156;
inline constexpr std::size_t kMaxColors = 6;
inline constexpr std::size_t kMaxKeypoints = 8;

// Normalized center-format box [xc, yc, w, h].
struct BoundingBox {
  double xc = 0.5;
  double yc = 0.5;
  double w = 1.0;
  double h = 1.0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Corners {
  double x1, y1, x2, y2;
  friend bool operator==(const Corners&, const Corners&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct ColorEntry {
  int index = 0;
  std::optional<double> proportion;
  friend bool operator==(const ColorEntry&, const ColorEntry&) = default;
};

struct ColorSet {
  std::vector<ColorEntry> entries;
  bool empty() const { return entries.empty(); }
  friend bool operator==(const ColorSet&, const ColorSet&) = default;
};

struct KeypointSet {
  std::vector<Point2> points;
  bool empty() const { return points.empty(); }
  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

struct VisualConcept {
  std::string id;
  std::string description;
  BoundingBox box;
  ColorSet colors;
  KeypointSet keypoints;

  friend bool operator==(const VisualConcept&, const VisualConcept&) = default;
};

// Equal in everything but the id.
bool same_content(const VisualConcept& a, const VisualConcept& b);

struct SemanticPanel {
  std::string prompt;
  std::vector<VisualConcept> concepts;
  std::int64_t version = 0;

  const VisualConcept* find(std::string_view id) const;
  friend bool operator==(const SemanticPanel&, const SemanticPanel&) = default;
};

struct Violation {
  std::string concept_id;  // empty for panel-level violations
  std::string field;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_panel(const SemanticPanel& panel);
ValidationReport validate_concept(const VisualConcept& vc);
ValidationReport validate_box(const BoundingBox& box, const std::string& concept_id = {});

// Throws Error(kValidation) carrying the first violation as locus.
void require_valid(const SemanticPanel& panel, const char* module);

// Corner form, clamped to [0,1].
Corners box_corners(const BoundingBox& box);
BoundingBox box_from_corners(const Corners& c);
double box_iou(const BoundingBox& a, const BoundingBox& b);

Point2 clamp_into(const Point2& p, const BoundingBox& box);

// Shared rasterization rule: a cell is inside a box when its center lies in
// [x1, x2) x [y1, y2) of the clamped corner form.
bool center_inside(const Corners& c, double cx, double cy);
BinaryGrid rasterize_box(const BoundingBox& box, int rows, int cols);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Concept ids have the form "c<version>_<ordinal>". Since versions only grow,
// ids minted at different versions never collide.
std::string fresh_concept_id(const SemanticPanel& panel, std::int64_t version);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s);

}  // namespace spanel
