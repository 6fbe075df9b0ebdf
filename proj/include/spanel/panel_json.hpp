#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "spanel/core.hpp"

namespace spanel {

using ojson = nlohmann::ordered_json;

struct PanelParseOptions {
  // Invariant checks after a schema-valid parse.
  bool validate = true;
  // Concepts may omit `id` or leave it empty (LLM replies); callers assign ids.
  bool allow_missing_ids = false;
};

ojson box_to_json(const BoundingBox& box);
ojson concept_to_json(const VisualConcept& vc);
ojson panel_to_json_value(const SemanticPanel& panel);

// Canonical text: field order per schema, two-space indent, shortest
// round-trip representation for every double.
std::string panel_to_json(const SemanticPanel& panel);

SemanticPanel panel_from_json(std::string_view text, const PanelParseOptions& options = {});
SemanticPanel panel_from_json_value(const nlohmann::json& value, const PanelParseOptions& options = {});

BoundingBox box_from_json(const nlohmann::json& value, const std::string& locus);
VisualConcept concept_from_json(const nlohmann::json& value, const std::string& locus, bool allow_missing_id);
ColorSet colors_from_json(const nlohmann::json& value, const std::string& locus);
KeypointSet keypoints_from_json(const nlohmann::json& value, const std::string& locus);

ojson report_to_json(const ValidationReport& report);

// Parses text as JSON; failures become Error(kParse) with "line L, column C".
nlohmann::json parse_json_text(std::string_view text, const char* module);

}  // namespace spanel
