#include "spanel/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "spanel/error.hpp"

namespace spanel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

bool same_content(const VisualConcept& a, const VisualConcept& b) {
  return a.description == b.description && a.box == b.box && a.colors == b.colors &&
         a.keypoints == b.keypoints;
}

const VisualConcept* SemanticPanel::find(std::string_view id) const {
  for (const auto& c : concepts) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

Corners box_corners(const BoundingBox& box) {
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {clamp01(box.xc - box.w / 2), clamp01(box.yc - box.h / 2), clamp01(box.xc + box.w / 2),
          clamp01(box.yc + box.h / 2)};
}

BoundingBox box_from_corners(const Corners& c) {
  return {(c.x1 + c.x2) / 2, (c.y1 + c.y2) / 2, c.x2 - c.x1, c.y2 - c.y1};
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const Corners ca = box_corners(a);
  const Corners cb = box_corners(b);
  const double iw = std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1);
  const double ih = std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (ca.x2 - ca.x1) * (ca.y2 - ca.y1);
  const double area_b = (cb.x2 - cb.x1) * (cb.y2 - cb.y1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Point2 clamp_into(const Point2& p, const BoundingBox& box) {
  const Corners c = box_corners(box);
  return {std::clamp(p.x, c.x1, c.x2), std::clamp(p.y, c.y1, c.y2)};
}

bool center_inside(const Corners& c, double cx, double cy) {
  return cx >= c.x1 && cx < c.x2 && cy >= c.y1 && cy < c.y2;
}

BinaryGrid rasterize_box(const BoundingBox& box, int rows, int cols) {
  BinaryGrid grid(rows, cols, 0);
  const Corners c = box_corners(box);
  for (int i = 0; i < rows; ++i) {
    const double cy = (i + 0.5) / rows;
    if (cy < c.y1 || cy >= c.y2) continue;
    for (int j = 0; j < cols; ++j) {
      const double cx = (j + 0.5) / cols;
      if (center_inside(c, cx, cy)) grid.at(i, j) = 1;
    }
  }
  return grid;
}

ValidationReport validate_box(const BoundingBox& box, const std::string& concept_id) {
  ValidationReport report;
  auto bad = [&](const char* what) { report.push_back({concept_id, "box", what}); };
  if (!std::isfinite(box.xc) || !std::isfinite(box.yc) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    bad("box has non-finite coordinates");
    return report;
  }
  if (box.xc < 0 || box.xc > 1) bad("xc outside [0,1]");
  if (box.yc < 0 || box.yc > 1) bad("yc outside [0,1]");
  if (box.w <= 0 || box.w > 1) bad("w outside (0,1]");
  if (box.h <= 0 || box.h > 1) bad("h outside (0,1]");
  if (report.empty()) {
    const Corners c = box_corners(box);
    if (c.x1 > c.x2 || c.y1 > c.y2) bad("corner form inverts");
  }
  return report;
}

ValidationReport validate_concept(const VisualConcept& vc) {
  ValidationReport report;
  const std::string& id = vc.id;
  if (id.empty()) report.push_back({id, "id", "id is empty"});
  if (trim(vc.description).empty()) report.push_back({id, "description", "description is empty"});

  ValidationReport box_report = validate_box(vc.box, id);
  report.insert(report.end(), box_report.begin(), box_report.end());

  const auto& colors = vc.colors.entries;
  if (colors.size() > kMaxColors) report.push_back({id, "colors", "ColorSet exceeds 6"});
  std::set<int> seen;
  for (const auto& e : colors) {
    if (e.index < 0 || e.index >= kPaletteSize) {
      report.push_back({id, "colors", "palette index " + std::to_string(e.index) + " out of range"});
    } else if (!seen.insert(e.index).second) {
      report.push_back({id, "colors", "duplicate palette index " + std::to_string(e.index)});
    }
    if (e.proportion && !(*e.proportion > 0.05 && *e.proportion <= 1.0)) {
      report.push_back({id, "colors", "proportion must lie in (0.05, 1]"});
    }
  }

  const auto& points = vc.keypoints.points;
  if (points.size() > kMaxKeypoints) report.push_back({id, "keypoints", "KeypointSet exceeds 8"});
  if (box_report.empty()) {
    const Corners c = box_corners(vc.box);
    for (const auto& p : points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < c.x1 || p.x > c.x2 || p.y < c.y1 || p.y > c.y2) {
        report.push_back({id, "keypoints", "keypoint lies outside the box"});
        break;
      }
    }
  }
  return report;
}

ValidationReport validate_panel(const SemanticPanel& panel) {
  ValidationReport report;
  if (panel.version < 0) report.push_back({"", "version", "version is negative"});
  std::set<std::string> ids;
  for (const auto& vc : panel.concepts) {
    if (!vc.id.empty() && !ids.insert(vc.id).second) {
      report.push_back({vc.id, "id", "duplicate concept id"});
    }
    auto r = validate_concept(vc);
    report.insert(report.end(), r.begin(), r.end());
  }
  return report;
}

void require_valid(const SemanticPanel& panel, const char* module) {
  const auto report = validate_panel(panel);
  if (report.empty()) return;
  const auto& v = report.front();
  std::string locus = v.concept_id.empty() ? v.field : v.concept_id + "." + v.field;
  throw Error(ErrorCode::kValidation, module, v.message, locus);
}

std::string fresh_concept_id(const SemanticPanel& panel, std::int64_t version) {
  for (int ordinal = 1;; ++ordinal) {
    std::string id = "c" + std::to_string(version) + "_" + std::to_string(ordinal);
    if (panel.find(id) == nullptr) return id;
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace spanel
