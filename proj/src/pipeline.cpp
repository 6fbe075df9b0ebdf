#include "spanel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <numeric>
#include <thread>

#include "spanel/assets.hpp"
#include "spanel/error.hpp"
#include "spanel/image_io.hpp"
#include "spanel/panel_json.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "data-pipeline";

[[noreturn]] void field_error(const std::string& locus, const std::string& message) {
  throw Error(ErrorCode::kParse, kModule, message, locus);
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& locus) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(locus + key, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const nlohmann::json& obj, const char* key, const std::string& locus) {
  const auto& v = field(obj, key, locus);
  if (!v.is_string()) field_error(locus + key, "expected a string");
  return v.get<std::string>();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace

DetectionRecord record_from_json(const nlohmann::json& value) {
  if (!value.is_object()) field_error("$", "record must be a JSON object");
  DetectionRecord r;
  r.source_id = string_field(value, "source_id", "");
  r.caption = string_field(value, "caption", "");
  const auto& w = field(value, "width", "");
  const auto& h = field(value, "height", "");
  if (!w.is_number_integer() || w.get<long long>() <= 0) field_error("width", "expected a positive integer");
  if (!h.is_number_integer() || h.get<long long>() <= 0) field_error("height", "expected a positive integer");
  r.width = w.get<int>();
  r.height = h.get<int>();
  if (auto it = value.find("image_path"); it != value.end() && !it->is_null()) {
    r.image_path = string_field(value, "image_path", "");
  }
  if (auto it = value.find("vqa_single_object"); it != value.end() && !it->is_null()) {
    r.vqa_single_object = string_field(value, "vqa_single_object", "");
  }
  const auto& dets = field(value, "detections", "");
  if (!dets.is_array()) field_error("detections", "detections must be an array");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string locus = "detections[" + std::to_string(i) + "].";
    const auto& d = dets[i];
    if (!d.is_object()) field_error(locus.substr(0, locus.size() - 1), "detection must be an object");
    Detection det;
    det.description = string_field(d, "description", locus);
    det.box = box_from_json(field(d, "box", locus), locus + "box");
    if (auto it = d.find("confidence"); it != d.end()) {
      if (!it->is_number()) field_error(locus + "confidence", "expected a number");
      det.confidence = it->get<double>();
    }
    det.mask_path = string_field(d, "mask_path", locus);
    r.detections.push_back(std::move(det));
  }
  return r;
}

nlohmann::ordered_json record_to_json(const DetectionRecord& record) {
  nlohmann::ordered_json out;
  out["source_id"] = record.source_id;
  out["caption"] = record.caption;
  out["width"] = record.width;
  out["height"] = record.height;
  if (!record.image_path.empty()) out["image_path"] = record.image_path;
  out["detections"] = nlohmann::ordered_json::array();
  for (const auto& d : record.detections) {
    out["detections"].push_back({{"description", d.description},
                                 {"box", box_to_json(d.box)},
                                 {"confidence", d.confidence},
                                 {"mask_path", d.mask_path}});
  }
  if (record.vqa_single_object) out["vqa_single_object"] = *record.vqa_single_object;
  return out;
}

std::string normalize_description(std::string_view text) {
  std::string out;
  for (char c : to_lower(trim(text))) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

Blacklist Blacklist::from_text(std::string_view text) {
  Blacklist b;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    if (!line.empty() && line.front() != '#') b.phrases_.push_back(normalize_description(line));
    start = end + 1;
  }
  return b;
}

const Blacklist& Blacklist::shipped() {
  static const Blacklist list = from_text(assets::get("blacklist.txt"));
  return list;
}

bool Blacklist::matches(std::string_view description) const {
  const std::string key = normalize_description(description);
  return std::find(phrases_.begin(), phrases_.end(), key) != phrases_.end();
}

DetectionRecord filter_descriptions(DetectionRecord record, const Blacklist& blacklist) {
  std::erase_if(record.detections, [&](const Detection& d) { return blacklist.matches(d.description); });
  return record;
}

DetectionRecord dedup_boxes(DetectionRecord record) {
  const auto& dets = record.detections;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<std::string> keys;
  for (const auto& d : dets) keys.push_back(normalize_description(d.description));
  std::vector<bool> keep(dets.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return keys[k] == keys[i] && box_iou(dets[k].box, dets[i].box) > kDedupIou;
    });
    if (!duplicate) {
      keep[i] = true;
      kept.push_back(i);
    }
  }
  std::vector<Detection> survivors;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) survivors.push_back(dets[i]);
  }
  record.detections = std::move(survivors);
  return record;
}

const char* to_string(CaptionAction action) { return action == CaptionAction::kKeep ? "keep" : "replace"; }

CaptionDecision caption_audit(const DetectionRecord& record) {
  if (!record.vqa_single_object) return {CaptionAction::kKeep, "no single-object answer; raw caption kept"};
  std::string answer = normalize_description(*record.vqa_single_object);
  while (!answer.empty() && std::ispunct(static_cast<unsigned char>(answer.back()))) answer.pop_back();
  if (answer == "no") return {CaptionAction::kReplace, std::nullopt};
  if (answer == "yes") return {CaptionAction::kKeep, std::nullopt};
  return {CaptionAction::kKeep, "unrecognized single-object answer '" + *record.vqa_single_object +
                                    "'; raw caption kept"};
}

nlohmann::ordered_json entry_to_json(const DatasetEntry& entry) {
  nlohmann::ordered_json out;
  out["source_id"] = entry.source_id;
  out["caption"] = entry.caption;
  out["caption_action"] = to_string(entry.caption_action);
  out["provenance"] = entry.provenance;
  out["exclude"] = entry.exclude;
  out["skipped"] = entry.skipped;
  if (entry.skipped) {
    out["skip_reason"] = entry.skip_reason;
  } else {
    out["panel"] = panel_to_json_value(entry.panel);
  }
  out["warnings"] = entry.warnings;
  return out;
}

DatasetEntry ingest_record(const DetectionRecord& record, const IngestOptions& options, const Palette& palette) {
  DatasetEntry entry;
  entry.source_id = record.source_id;
  entry.caption = record.caption;
  const CaptionDecision decision = caption_audit(record);
  entry.caption_action = decision.action;
  entry.provenance = decision.action == CaptionAction::kReplace ? "synthesized" : "raw";
  if (decision.warning) entry.warnings.push_back(*decision.warning);

  DetectionRecord clean = filter_descriptions(record, options.blacklist ? *options.blacklist : Blacklist::shipped());
  const std::size_t filtered = record.detections.size() - clean.detections.size();
  if (filtered > 0) entry.warnings.push_back(std::to_string(filtered) + " blacklisted detections removed");
  const std::size_t before = clean.detections.size();
  clean = dedup_boxes(std::move(clean));
  if (clean.detections.size() < before) {
    entry.warnings.push_back(std::to_string(before - clean.detections.size()) + " duplicate boxes removed");
  }

  auto skip = [&](std::string reason) {
    entry.skipped = true;
    entry.skip_reason = std::move(reason);
    return entry;
  };

  std::optional<RgbImage> image;
  if (!record.image_path.empty()) {
    try {
      image = decode_image(read_file(resolve(options.base_dir, record.image_path)));
    } catch (const Error& e) {
      return skip("unreadable image '" + record.image_path + "': " + e.what());
    }
    if (image->width != record.width || image->height != record.height) {
      return skip("image '" + record.image_path + "' is " + std::to_string(image->width) + "x" +
                  std::to_string(image->height) + ", record says " + std::to_string(record.width) + "x" +
                  std::to_string(record.height));
    }
  } else if (!clean.detections.empty()) {
    entry.warnings.push_back("no image_path; colors left empty");
  }

  SemanticPanel& panel = entry.panel;
  panel.prompt = record.caption;
  const std::uint64_t seed_base = fnv1a(record.source_id);
  for (std::size_t i = 0; i < clean.detections.size(); ++i) {
    const Detection& det = clean.detections[i];
    const ValidationReport box_report = validate_box(det.box);
    if (!box_report.empty()) {
      entry.warnings.push_back("detection '" + det.description + "' dropped: " + box_report.front().message);
      continue;
    }
    BinaryGrid mask;
    try {
      mask = decode_pgm_mask(read_file(resolve(options.base_dir, det.mask_path)));
    } catch (const Error& e) {
      return skip("unreadable mask '" + det.mask_path + "': " + e.what());
    }
    if (mask.cols != record.width || mask.rows != record.height) {
      return skip("mask '" + det.mask_path + "' is " + std::to_string(mask.cols) + "x" + std::to_string(mask.rows) +
                  ", image is " + std::to_string(record.width) + "x" + std::to_string(record.height));
    }
    VisualConcept vc;
    vc.id = fresh_concept_id(panel, 0);
    vc.description = trim(det.description);
    vc.box = det.box;
    const bool any = std::any_of(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; });
    if (!any) {
      entry.warnings.push_back("mask '" + det.mask_path + "' is empty; no colors or keypoints");
    } else {
      if (image) {
        std::vector<Rgb> region;
        for (std::size_t k = 0; k < mask.data.size(); ++k) {
          if (mask.data[k]) region.push_back(image->pixels[k]);
        }
        vc.colors = extract_colors(region, palette);
      }
      FpsOptions fps = options.fps;
      fps.seed = seed_base ^ static_cast<std::uint64_t>(i);
      vc.keypoints = fps_sample(RegionMask{mask, det.box}, fps);
    }
    panel.concepts.push_back(std::move(vc));
  }
  if (panel.concepts.empty()) {
    entry.exclude = true;
    entry.warnings.push_back("no detections left; entry excluded");
  }
  require_valid(panel, kModule);
  return entry;
}

std::vector<DatasetEntry> ingest_lines(const std::vector<std::string>& lines, const IngestOptions& options,
                                       unsigned threads) {
  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!trim(lines[i]).empty()) work.push_back(i);
  }
  std::vector<DatasetEntry> out(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) {
      const std::size_t line_no = work[k] + 1;
      DatasetEntry& entry = out[k];
      try {
        entry = ingest_record(record_from_json(parse_json_text(lines[work[k]], kModule)), options);
      } catch (const Error& e) {
        entry = DatasetEntry{};
        entry.source_id = "line-" + std::to_string(line_no);
        try {
          auto v = nlohmann::json::parse(lines[work[k]]);
          if (v.is_object() && v.contains("source_id") && v["source_id"].is_string()) {
            entry.source_id = v["source_id"].get<std::string>();
          }
        } catch (const nlohmann::json::exception&) {
        }
        entry.skipped = true;
        entry.provenance = "raw";
        entry.skip_reason = "line " + std::to_string(line_no) + ": " + e.what() +
                            (e.locus().empty() ? "" : " (" + e.locus() + ")");
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, work.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::stable_sort(out.begin(), out.end(),
                   [](const DatasetEntry& a, const DatasetEntry& b) { return a.source_id < b.source_id; });
  return out;
}

}  // namespace spanel
