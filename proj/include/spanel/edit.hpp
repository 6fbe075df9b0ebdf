#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanel/core.hpp"
#include "spanel/grid.hpp"

namespace spanel {

enum class EditKind { kAdd, kRemove, kReplace, kResize, kMove, kAttributeRevise };

const char* to_string(EditKind kind);
EditKind edit_kind_from_string(const std::string& s);

struct AttributeDelta {
  std::optional<std::string> description;
  std::optional<ColorSet> colors;
  std::optional<KeypointSet> keypoints;

  bool empty() const { return !description && !colors && !keypoints; }
  friend bool operator==(const AttributeDelta&, const AttributeDelta&) = default;
};

// One unit operation. Which payload member is populated depends on kind:
// Add/Replace carry `concept`, Resize/Move carry `box`, AttributeRevise
// carries `attributes`, Remove carries nothing.
struct EditOp {
  EditKind kind = EditKind::kAdd;
  std::string target;
  std::optional<VisualConcept> payload;
  std::optional<BoundingBox> box;
  AttributeDelta attributes;

  static EditOp add(VisualConcept vc);
  static EditOp remove(std::string target);
  static EditOp replace(std::string target, VisualConcept vc);
  static EditOp resize(std::string target, BoundingBox box);
  static EditOp move(std::string target, BoundingBox box);
  static EditOp revise(std::string target, AttributeDelta delta);

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

nlohmann::ordered_json edit_op_to_json(const EditOp& op);
EditOp edit_op_from_json(const nlohmann::json& value, const std::string& locus = "op");

// Returns a new panel with version + 1. The input is never modified.
// Throws Error(kNotFound) for an unknown target, Error(kInvalidArgument) for a
// payload that does not fit the kind or breaks a panel invariant.
SemanticPanel apply_edit(const SemanticPanel& panel, const EditOp& op);

// Applies ops in order; the whole batch fails if any op fails.
SemanticPanel apply_edits(const SemanticPanel& panel, const std::vector<EditOp>& ops);

struct DiffEntry {
  std::string id;
  std::optional<BoundingBox> old_box;
  std::optional<BoundingBox> new_box;
  friend bool operator==(const DiffEntry&, const DiffEntry&) = default;
};

// Entries follow old-panel order (removed/changed) then new-panel order (added).
struct PanelDiff {
  std::vector<DiffEntry> adjusted;
  bool empty() const { return adjusted.empty(); }
  const DiffEntry* find(const std::string& id) const;
};

PanelDiff diff_panels(const SemanticPanel& old_panel, const SemanticPanel& new_panel);
nlohmann::ordered_json diff_to_json(const PanelDiff& diff);

// Minimal op list that turns `old_panel` into `new_panel` up to concept order.
std::vector<EditOp> derive_edit_ops(const SemanticPanel& old_panel, const SemanticPanel& new_panel);

using EditableRegionMask = BinaryGrid;

EditableRegionMask editable_region_mask(const PanelDiff& diff, int rows, int cols);

struct LatentTensor {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  LatentTensor() = default;
  LatentTensor(int c, int r, int w, float fill = 0.0f)
      : channels(c), rows(r), cols(w), data(static_cast<std::size_t>(c) * r * w, fill) {}

  float& at(int c, int i, int j) { return data[(static_cast<std::size_t>(c) * rows + i) * cols + j]; }
  float at(int c, int i, int j) const { return data[(static_cast<std::size_t>(c) * rows + i) * cols + j]; }

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;
};

// x_hat = M * x_new + (1 - M) * x_old, mask broadcast over channels. With a
// binary mask this is a per-element selection, so results are bit-exact.
LatentTensor blend_latents(const LatentTensor& x_old, const LatentTensor& x_new, const EditableRegionMask& mask);

}  // namespace spanel
