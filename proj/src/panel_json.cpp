#include "spanel/panel_json.hpp"

#include <cmath>

#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "panel-core";

[[noreturn]] void schema_error(const std::string& locus, const std::string& message) {
  throw Error(ErrorCode::kParse, kModule, message, locus);
}

const nlohmann::json& member(const nlohmann::json& obj, const char* key, const std::string& locus) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(locus.empty() ? key : locus + "." + key, std::string("missing field '") + key + "'");
  return *it;
}

double number(const nlohmann::json& v, const std::string& locus) {
  if (!v.is_number()) schema_error(locus, "expected a number");
  return v.get<double>();
}

std::string text(const nlohmann::json& v, const std::string& locus) {
  if (!v.is_string()) schema_error(locus, "expected a string");
  return v.get<std::string>();
}

std::pair<int, int> line_and_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ojson box_to_json(const BoundingBox& box) { return ojson::array({box.xc, box.yc, box.w, box.h}); }

ojson concept_to_json(const VisualConcept& vc) {
  ojson out;
  out["id"] = vc.id;
  out["description"] = vc.description;
  out["box"] = box_to_json(vc.box);
  ojson colors = ojson::array();
  for (const auto& e : vc.colors.entries) {
    ojson entry;
    entry["index"] = e.index;
    entry["proportion"] = e.proportion ? ojson(*e.proportion) : ojson(nullptr);
    colors.push_back(std::move(entry));
  }
  out["colors"] = std::move(colors);
  ojson points = ojson::array();
  for (const auto& p : vc.keypoints.points) points.push_back(ojson::array({p.x, p.y}));
  out["keypoints"] = std::move(points);
  return out;
}

ojson panel_to_json_value(const SemanticPanel& panel) {
  ojson out;
  out["prompt"] = panel.prompt;
  out["version"] = panel.version;
  ojson concepts = ojson::array();
  for (const auto& c : panel.concepts) concepts.push_back(concept_to_json(c));
  out["concepts"] = std::move(concepts);
  return out;
}

std::string panel_to_json(const SemanticPanel& panel) { return panel_to_json_value(panel).dump(2); }

nlohmann::json parse_json_text(std::string_view text, const char* module) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_and_column(text, e.byte);
    throw Error(ErrorCode::kParse, module, e.what(),
                "line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

BoundingBox box_from_json(const nlohmann::json& value, const std::string& locus) {
  if (!value.is_array() || value.size() != 4) schema_error(locus, "box must be an array of 4 numbers");
  return {number(value[0], locus + "[0]"), number(value[1], locus + "[1]"), number(value[2], locus + "[2]"),
          number(value[3], locus + "[3]")};
}

ColorSet colors_from_json(const nlohmann::json& value, const std::string& locus) {
  if (!value.is_array()) schema_error(locus, "colors must be an array");
  ColorSet out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string at = locus + "[" + std::to_string(i) + "]";
    const auto& entry = value[i];
    if (!entry.is_object()) schema_error(at, "color entry must be an object");
    const auto& index = member(entry, "index", at);
    if (!index.is_number_integer()) schema_error(at + ".index", "expected an integer");
    ColorEntry e;
    e.index = index.get<int>();
    if (auto it = entry.find("proportion"); it != entry.end() && !it->is_null()) {
      e.proportion = number(*it, at + ".proportion");
    }
    out.entries.push_back(e);
  }
  return out;
}

KeypointSet keypoints_from_json(const nlohmann::json& value, const std::string& locus) {
  if (!value.is_array()) schema_error(locus, "keypoints must be an array");
  KeypointSet out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string at = locus + "[" + std::to_string(i) + "]";
    const auto& p = value[i];
    if (!p.is_array() || p.size() != 2) schema_error(at, "keypoint must be an [x, y] pair");
    out.points.push_back({number(p[0], at + "[0]"), number(p[1], at + "[1]")});
  }
  return out;
}

VisualConcept concept_from_json(const nlohmann::json& value, const std::string& locus, bool allow_missing_id) {
  if (!value.is_object()) schema_error(locus, "concept must be an object");
  VisualConcept c;
  if (auto it = value.find("id"); it != value.end() && !(allow_missing_id && it->is_null())) {
    c.id = text(*it, locus + ".id");
  } else if (!allow_missing_id) {
    schema_error(locus + ".id", "missing field 'id'");
  }
  c.description = text(member(value, "description", locus), locus + ".description");
  c.box = box_from_json(member(value, "box", locus), locus + ".box");
  if (auto it = value.find("colors"); it != value.end()) c.colors = colors_from_json(*it, locus + ".colors");
  if (auto it = value.find("keypoints"); it != value.end()) {
    c.keypoints = keypoints_from_json(*it, locus + ".keypoints");
  }
  return c;
}

SemanticPanel panel_from_json_value(const nlohmann::json& value, const PanelParseOptions& options) {
  if (!value.is_object()) schema_error("$", "panel must be a JSON object");
  SemanticPanel panel;
  panel.prompt = text(member(value, "prompt", ""), "prompt");
  const auto& version = member(value, "version", "");
  if (!version.is_number_integer()) schema_error("version", "expected an integer");
  panel.version = version.get<std::int64_t>();
  const auto& concepts = member(value, "concepts", "");
  if (!concepts.is_array()) schema_error("concepts", "concepts must be an array");
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    panel.concepts.push_back(
        concept_from_json(concepts[i], "concepts[" + std::to_string(i) + "]", options.allow_missing_ids));
  }
  if (options.validate) require_valid(panel, kModule);
  return panel;
}

SemanticPanel panel_from_json(std::string_view text, const PanelParseOptions& options) {
  return panel_from_json_value(parse_json_text(text, kModule), options);
}

ojson report_to_json(const ValidationReport& report) {
  ojson out = ojson::array();
  for (const auto& v : report) {
    out.push_back({{"concept_id", v.concept_id}, {"field", v.field}, {"message", v.message}});
  }
  return out;
}

}  // namespace spanel
