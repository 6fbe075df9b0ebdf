#include "spanel/edit.hpp"

#include <algorithm>
#include <set>

#include "spanel/error.hpp"
#include "spanel/panel_json.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "panel-edit";

[[noreturn]] void invalid(const std::string& message, const std::string& locus = {}) {
  throw Error(ErrorCode::kInvalidArgument, kModule, message, locus);
}

void check_box(const BoundingBox& box, const std::string& locus) {
  auto report = validate_box(box);
  if (!report.empty()) invalid(report.front().message, locus);
}

void check_concept(const VisualConcept& vc, const std::string& locus) {
  auto report = validate_concept(vc);
  if (!report.empty()) invalid(report.front().message, locus + "." + report.front().field);
}

std::size_t index_of(const SemanticPanel& panel, const std::string& id) {
  for (std::size_t i = 0; i < panel.concepts.size(); ++i) {
    if (panel.concepts[i].id == id) return i;
  }
  throw Error(ErrorCode::kNotFound, kModule, "unknown concept id '" + id + "'", "target");
}

KeypointSet map_keypoints(const KeypointSet& points, const BoundingBox& from, const BoundingBox& to) {
  KeypointSet out;
  const double sx = to.w / from.w;
  const double sy = to.h / from.h;
  for (const auto& p : points.points) {
    Point2 q{to.xc + (p.x - from.xc) * sx, to.yc + (p.y - from.yc) * sy};
    out.points.push_back(clamp_into(q, to));
  }
  return out;
}

KeypointSet translate_keypoints(const KeypointSet& points, const BoundingBox& from, const BoundingBox& to) {
  KeypointSet out;
  const double dx = to.xc - from.xc;
  const double dy = to.yc - from.yc;
  for (const auto& p : points.points) out.points.push_back(clamp_into({p.x + dx, p.y + dy}, to));
  return out;
}

}  // namespace

const char* to_string(EditKind kind) {
  switch (kind) {
    case EditKind::kAdd: return "add";
    case EditKind::kRemove: return "remove";
    case EditKind::kReplace: return "replace";
    case EditKind::kResize: return "resize";
    case EditKind::kMove: return "move";
    case EditKind::kAttributeRevise: return "attribute_revise";
  }
  return "unknown";
}

EditKind edit_kind_from_string(const std::string& s) {
  const std::string k = to_lower(s);
  if (k == "add") return EditKind::kAdd;
  if (k == "remove") return EditKind::kRemove;
  if (k == "replace") return EditKind::kReplace;
  if (k == "resize") return EditKind::kResize;
  if (k == "move") return EditKind::kMove;
  if (k == "attribute_revise" || k == "attributerevise") return EditKind::kAttributeRevise;
  invalid("unknown edit kind '" + s + "'", "kind");
}

EditOp EditOp::add(VisualConcept vc) {
  EditOp op;
  op.kind = EditKind::kAdd;
  op.payload = std::move(vc);
  return op;
}

EditOp EditOp::remove(std::string target) {
  EditOp op;
  op.kind = EditKind::kRemove;
  op.target = std::move(target);
  return op;
}

EditOp EditOp::replace(std::string target, VisualConcept vc) {
  EditOp op;
  op.kind = EditKind::kReplace;
  op.target = std::move(target);
  op.payload = std::move(vc);
  return op;
}

EditOp EditOp::resize(std::string target, BoundingBox box) {
  EditOp op;
  op.kind = EditKind::kResize;
  op.target = std::move(target);
  op.box = box;
  return op;
}

EditOp EditOp::move(std::string target, BoundingBox box) {
  EditOp op;
  op.kind = EditKind::kMove;
  op.target = std::move(target);
  op.box = box;
  return op;
}

EditOp EditOp::revise(std::string target, AttributeDelta delta) {
  EditOp op;
  op.kind = EditKind::kAttributeRevise;
  op.target = std::move(target);
  op.attributes = std::move(delta);
  return op;
}

nlohmann::ordered_json edit_op_to_json(const EditOp& op) {
  nlohmann::ordered_json out;
  out["kind"] = to_string(op.kind);
  out["target"] = op.kind == EditKind::kAdd ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(op.target);
  switch (op.kind) {
    case EditKind::kAdd:
    case EditKind::kReplace:
      out["payload"] = op.payload ? concept_to_json(*op.payload) : nlohmann::ordered_json(nullptr);
      break;
    case EditKind::kResize:
    case EditKind::kMove:
      out["payload"] = {{"box", op.box ? box_to_json(*op.box) : nlohmann::ordered_json(nullptr)}};
      break;
    case EditKind::kAttributeRevise: {
      nlohmann::ordered_json payload = nlohmann::ordered_json::object();
      if (op.attributes.description) payload["description"] = *op.attributes.description;
      if (op.attributes.colors) {
        VisualConcept tmp;
        tmp.colors = *op.attributes.colors;
        payload["colors"] = concept_to_json(tmp)["colors"];
      }
      if (op.attributes.keypoints) {
        VisualConcept tmp;
        tmp.keypoints = *op.attributes.keypoints;
        payload["keypoints"] = concept_to_json(tmp)["keypoints"];
      }
      out["payload"] = std::move(payload);
      break;
    }
    case EditKind::kRemove:
      out["payload"] = nullptr;
      break;
  }
  return out;
}

EditOp edit_op_from_json(const nlohmann::json& value, const std::string& locus) {
  try {
    if (!value.is_object()) invalid("edit op must be a JSON object", locus);
    auto kind_it = value.find("kind");
    if (kind_it == value.end() || !kind_it->is_string()) invalid("missing string field 'kind'", locus + ".kind");
    EditOp op;
    op.kind = edit_kind_from_string(kind_it->get<std::string>());

    if (op.kind != EditKind::kAdd) {
      auto t = value.find("target");
      if (t == value.end() || !t->is_string() || t->get<std::string>().empty()) {
        invalid("op requires a target concept id", locus + ".target");
      }
      op.target = t->get<std::string>();
    }

    const nlohmann::json null_payload;
    auto p = value.find("payload");
    const nlohmann::json& payload = p == value.end() ? null_payload : *p;
    const std::string at = locus + ".payload";

    auto require_keys = [&](std::set<std::string> allowed) {
      if (!payload.is_object()) invalid("payload must be an object", at);
      for (const auto& [key, _] : payload.items()) {
        if (!allowed.count(key)) invalid("field '" + key + "' not allowed for " + to_string(op.kind), at + "." + key);
      }
    };

    switch (op.kind) {
      case EditKind::kAdd:
      case EditKind::kReplace:
        if (!payload.is_object()) invalid("payload must be a concept object", at);
        op.payload = concept_from_json(payload, at, /*allow_missing_id=*/true);
        break;
      case EditKind::kResize:
      case EditKind::kMove:
        require_keys({"box"});
        if (!payload.contains("box")) invalid("payload requires 'box'", at + ".box");
        op.box = box_from_json(payload["box"], at + ".box");
        break;
      case EditKind::kAttributeRevise:
        require_keys({"description", "colors", "keypoints"});
        if (payload.contains("description")) {
          if (!payload["description"].is_string()) invalid("expected a string", at + ".description");
          op.attributes.description = payload["description"].get<std::string>();
        }
        if (payload.contains("colors")) op.attributes.colors = colors_from_json(payload["colors"], at + ".colors");
        if (payload.contains("keypoints")) {
          op.attributes.keypoints = keypoints_from_json(payload["keypoints"], at + ".keypoints");
        }
        if (op.attributes.empty()) invalid("attribute_revise needs at least one attribute", at);
        break;
      case EditKind::kRemove:
        if (!payload.is_null() && !(payload.is_object() && payload.empty())) invalid("remove takes no payload", at);
        break;
    }
    return op;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kInvalidArgument, kModule, e.what(), e.locus());
    throw;
  }
}

SemanticPanel apply_edit(const SemanticPanel& panel, const EditOp& op) {
  SemanticPanel out = panel;
  out.version = panel.version + 1;

  switch (op.kind) {
    case EditKind::kAdd: {
      if (!op.payload) invalid("add requires a concept payload", "payload");
      VisualConcept c = *op.payload;
      if (c.id.empty()) {
        c.id = fresh_concept_id(panel, out.version);
      } else if (panel.find(c.id) != nullptr) {
        invalid("concept id '" + c.id + "' already exists", "payload.id");
      }
      check_concept(c, "payload");
      out.concepts.push_back(std::move(c));
      break;
    }
    case EditKind::kRemove: {
      out.concepts.erase(out.concepts.begin() + static_cast<std::ptrdiff_t>(index_of(panel, op.target)));
      break;
    }
    case EditKind::kReplace: {
      const std::size_t i = index_of(panel, op.target);
      if (!op.payload) invalid("replace requires a concept payload", "payload");
      if (!op.payload->id.empty() && op.payload->id != op.target) {
        invalid("replace payload id must be empty or equal the target", "payload.id");
      }
      VisualConcept c = *op.payload;
      c.id = op.target;
      check_concept(c, "payload");
      out.concepts[i] = std::move(c);
      break;
    }
    case EditKind::kResize:
    case EditKind::kMove: {
      const std::size_t i = index_of(panel, op.target);
      if (!op.box) invalid(std::string(to_string(op.kind)) + " requires a box payload", "payload.box");
      check_box(*op.box, "payload.box");
      VisualConcept& c = out.concepts[i];
      if (op.kind == EditKind::kMove) {
        if (op.box->w != c.box.w || op.box->h != c.box.h) {
          invalid("move must keep the box size; use resize", "payload.box");
        }
        c.keypoints = translate_keypoints(c.keypoints, c.box, *op.box);
      } else {
        c.keypoints = map_keypoints(c.keypoints, c.box, *op.box);
      }
      c.box = *op.box;
      break;
    }
    case EditKind::kAttributeRevise: {
      const std::size_t i = index_of(panel, op.target);
      if (op.attributes.empty()) invalid("attribute_revise needs at least one attribute", "payload");
      VisualConcept& c = out.concepts[i];
      if (op.attributes.description) c.description = *op.attributes.description;
      if (op.attributes.colors) c.colors = *op.attributes.colors;
      if (op.attributes.keypoints) c.keypoints = *op.attributes.keypoints;
      check_concept(c, "payload");
      break;
    }
  }
  return out;
}

SemanticPanel apply_edits(const SemanticPanel& panel, const std::vector<EditOp>& ops) {
  SemanticPanel current = panel;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    try {
      current = apply_edit(current, ops[i]);
    } catch (const Error& e) {
      throw Error(e.code(), e.module(), e.what(), "ops[" + std::to_string(i) + "]." + e.locus());
    }
  }
  return current;
}

const DiffEntry* PanelDiff::find(const std::string& id) const {
  for (const auto& e : adjusted) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

PanelDiff diff_panels(const SemanticPanel& old_panel, const SemanticPanel& new_panel) {
  PanelDiff diff;
  for (const auto& before : old_panel.concepts) {
    const VisualConcept* after = new_panel.find(before.id);
    if (after == nullptr) {
      diff.adjusted.push_back({before.id, before.box, std::nullopt});
    } else if (!same_content(before, *after)) {
      diff.adjusted.push_back({before.id, before.box, after->box});
    }
  }
  for (const auto& after : new_panel.concepts) {
    if (old_panel.find(after.id) == nullptr) diff.adjusted.push_back({after.id, std::nullopt, after.box});
  }
  return diff;
}

nlohmann::ordered_json diff_to_json(const PanelDiff& diff) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& e : diff.adjusted) {
    nlohmann::ordered_json entry;
    entry["id"] = e.id;
    entry["old_box"] = e.old_box ? box_to_json(*e.old_box) : nlohmann::ordered_json(nullptr);
    entry["new_box"] = e.new_box ? box_to_json(*e.new_box) : nlohmann::ordered_json(nullptr);
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<EditOp> derive_edit_ops(const SemanticPanel& old_panel, const SemanticPanel& new_panel) {
  std::vector<EditOp> ops;
  for (const auto& before : old_panel.concepts) {
    const VisualConcept* after = new_panel.find(before.id);
    if (after == nullptr) {
      ops.push_back(EditOp::remove(before.id));
      continue;
    }
    if (same_content(before, *after)) continue;
    if (after->description != before.description) {
      ops.push_back(EditOp::replace(before.id, *after));
      continue;
    }
    VisualConcept reached = before;
    if (after->box != before.box) {
      const bool same_size = after->box.w == before.box.w && after->box.h == before.box.h;
      EditOp geometric = same_size ? EditOp::move(before.id, after->box) : EditOp::resize(before.id, after->box);
      SemanticPanel probe;
      probe.concepts.push_back(before);
      reached = apply_edit(probe, geometric).concepts.front();
      ops.push_back(std::move(geometric));
    }
    AttributeDelta delta;
    if (reached.colors != after->colors) delta.colors = after->colors;
    if (reached.keypoints != after->keypoints) delta.keypoints = after->keypoints;
    if (!delta.empty()) ops.push_back(EditOp::revise(before.id, std::move(delta)));
  }
  for (const auto& after : new_panel.concepts) {
    if (old_panel.find(after.id) == nullptr) ops.push_back(EditOp::add(after));
  }
  return ops;
}

EditableRegionMask editable_region_mask(const PanelDiff& diff, int rows, int cols) {
  if (rows < 1 || cols < 1) invalid("mask dimensions must be at least 1");
  EditableRegionMask mask(rows, cols, 0);
  auto paint = [&](const BoundingBox& box) {
    const BinaryGrid r = rasterize_box(box, rows, cols);
    for (std::size_t k = 0; k < r.data.size(); ++k) mask.data[k] |= r.data[k];
  };
  for (const auto& e : diff.adjusted) {
    if (e.old_box) paint(*e.old_box);
    if (e.new_box) paint(*e.new_box);
  }
  return mask;
}

LatentTensor blend_latents(const LatentTensor& x_old, const LatentTensor& x_new, const EditableRegionMask& mask) {
  if (x_old.channels != x_new.channels || x_old.rows != x_new.rows || x_old.cols != x_new.cols ||
      x_old.data.size() != x_new.data.size()) {
    invalid("blend inputs differ in shape");
  }
  if (mask.rows != x_old.rows || mask.cols != x_old.cols) invalid("mask spatial dims do not match the latents");
  LatentTensor out = x_old;
  const std::size_t plane = static_cast<std::size_t>(x_old.rows) * x_old.cols;
  for (int c = 0; c < x_old.channels; ++c) {
    const std::size_t base = c * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      if (mask.data[k]) out.data[base + k] = x_new.data[base + k];
    }
  }
  return out;
}

}  // namespace spanel
