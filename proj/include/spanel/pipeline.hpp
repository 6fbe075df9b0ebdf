#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanel/core.hpp"
#include "spanel/keypoints.hpp"
#include "spanel/palette.hpp"

namespace spanel {

struct Detection {
  std::string description;
  BoundingBox box;
  double confidence = 1.0;
  std::string mask_path;  // 8-bit PGM with the image's dimensions
};

struct DetectionRecord {
  std::string source_id;
  std::string caption;
  int width = 0;
  int height = 0;
  std::string image_path;  // PPM or PNG; colors are skipped without it
  std::vector<Detection> detections;
  std::optional<std::string> vqa_single_object;
};

// Throws Error(kParse) naming the offending field.
DetectionRecord record_from_json(const nlohmann::json& value);
nlohmann::ordered_json record_to_json(const DetectionRecord& record);

// Lowercased, trimmed, inner whitespace collapsed.
std::string normalize_description(std::string_view text);

class Blacklist {
 public:
  // One phrase per line; '#' starts a comment line.
  static Blacklist from_text(std::string_view text);
  static const Blacklist& shipped();

  bool matches(std::string_view description) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;
};

DetectionRecord filter_descriptions(DetectionRecord record, const Blacklist& blacklist = Blacklist::shipped());

inline constexpr double kDedupIou = 0.9;

// Visits detections by descending confidence (ties: list order) and drops
// any whose normalized description matches an already kept detection with
// IoU > 0.9. Survivors keep their original order.
DetectionRecord dedup_boxes(DetectionRecord record);

enum class CaptionAction { kKeep, kReplace };

const char* to_string(CaptionAction action);

struct CaptionDecision {
  CaptionAction action = CaptionAction::kKeep;
  std::optional<std::string> warning;
};

// Answer to "is there only one element or object in the image?": "No" marks
// the caption for replacement by a synthesized one, "Yes" keeps it.
CaptionDecision caption_audit(const DetectionRecord& record);

struct DatasetEntry {
  std::string source_id;
  std::string caption;
  CaptionAction caption_action = CaptionAction::kKeep;
  std::string provenance;  // raw | synthesized | pseudo
  bool exclude = false;    // nothing left after filtering
  bool skipped = false;
  std::string skip_reason;
  SemanticPanel panel;
  std::vector<std::string> warnings;
};

nlohmann::ordered_json entry_to_json(const DatasetEntry& entry);

struct IngestOptions {
  std::string base_dir;  // resolves relative image and mask paths
  const Blacklist* blacklist = nullptr;  // shipped list when null
  FpsOptions fps;                        // seed is replaced per detection
};

// Filter, dedup, then per detection the palette colors of its mask pixels and
// FPS keypoints seeded with fnv1a(source_id) ^ detection index.
DatasetEntry ingest_record(const DetectionRecord& record, const IngestOptions& options = {},
                           const Palette& palette = default_palette());

// One record per non-blank line in, one entry per record out, sorted by
// source id. Lines that fail to parse become skipped entries.
std::vector<DatasetEntry> ingest_lines(const std::vector<std::string>& lines, const IngestOptions& options = {},
                                       unsigned threads = 0);

}  // namespace spanel
