#include "spanel/bridge.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <variant>

#include "spanel/error.hpp"
#include "spanel/palette.hpp"
#include "spanel/panel_json.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "llm-bridge";

std::string box_text(const BoundingBox& box) { return box_to_json(box).dump(); }

std::string describe_issue(const ParseIssue& issue) {
  if (issue.line > 0) return issue.message + " (line " + std::to_string(issue.line) + ")";
  return issue.message;
}

struct Exhausted {
  std::string message;
};

// Sends the stage request and re-asks after every unparseable reply. Returns
// the parsed value, or Exhausted once the retry budget is spent.
template <class T>
std::variant<T, Exhausted> converse(Stage stage, const std::string& system_prompt, const std::string& user,
                                    ChatProvider& provider, const BridgeOptions& options, SessionLog& log,
                                    const std::function<Parsed<T>(const std::string&)>& parse) {
  const std::string name = to_string(stage);
  ChatRequest request;
  request.stage = name;
  request.system_prompt = system_prompt;
  request.params = options.params;
  request.messages.push_back({"user", user});
  log.add(name, "system", system_prompt);
  log.add(name, "user", user);

  ParseIssue last;
  for (int attempt = 0; attempt <= options.parse_retries; ++attempt) {
    std::string reply;
    try {
      reply = provider.complete(request);
    } catch (const Error& e) {
      log.add(name, "error", e.what());
      throw Error(ErrorCode::kProvider, kModule, e.what(), name);
    }
    log.add(name, "assistant", reply);
    Parsed<T> parsed = parse(reply);
    if (parsed.ok()) return std::move(*parsed.value);
    last = parsed.issue;
    if (attempt == options.parse_retries) break;
    const std::string feedback =
        "Your reply could not be used: " + describe_issue(last) + ". Answer again in exactly the requested format.";
    log.add(name, "retry", feedback);
    request.messages.push_back({"assistant", reply});
    request.messages.push_back({"user", feedback});
  }
  return Exhausted{describe_issue(last)};
}

template <class T>
T require(std::variant<T, Exhausted> result, Stage stage, int retries) {
  if (auto* failure = std::get_if<Exhausted>(&result)) {
    throw Error(ErrorCode::kParse, kModule,
                "unusable reply after " + std::to_string(retries + 1) + " attempts: " + failure->message,
                to_string(stage));
  }
  return std::move(std::get<T>(result));
}

std::string normalize_label(std::string_view s) {
  std::string out;
  for (char c : to_lower(trim(s))) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return trim(out);
}

// "cat", "cat 2", "cat #2" and "cat_2" all name an instance of "cat".
bool label_names(const std::string& label, const std::string& description) {
  if (label == description) return true;
  if (!label.starts_with(description)) return false;
  std::string_view rest = std::string_view(label).substr(description.size());
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '#' || rest.front() == '_')) rest.remove_prefix(1);
  return !rest.empty() &&
         std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Parsed<std::vector<InstanceBox>> match_boxes(const Parsed<std::vector<BoxLine>>& parsed,
                                             const std::vector<std::string>& instances) {
  if (!parsed.ok()) return Parsed<std::vector<InstanceBox>>::failure(parsed.issue.message, parsed.issue.line);
  const auto& lines = *parsed.value;
  if (lines.size() != instances.size()) {
    return Parsed<std::vector<InstanceBox>>::failure("expected " + std::to_string(instances.size()) +
                                                     " boxes, one per instance, but got " +
                                                     std::to_string(lines.size()));
  }
  std::vector<int> assigned(instances.size(), -1);
  std::vector<bool> used(lines.size(), false);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string want = normalize_label(instances[i]);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (!used[k] && label_names(normalize_label(lines[k].description), want)) {
        assigned[i] = static_cast<int>(k);
        used[k] = true;
        break;
      }
    }
  }
  std::size_t next = 0;
  std::vector<InstanceBox> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (assigned[i] < 0) {
      while (used[next]) ++next;
      assigned[i] = static_cast<int>(next);
      used[next] = true;
    }
    out.push_back({instances[i], {}});
  }
  // Boxes are clamped by the caller so clamps can be logged.
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& v = lines[assigned[i]].values;
    out[i].box = {v[0], v[1], v[2], v[3]};
  }
  return Parsed<std::vector<InstanceBox>>::success(std::move(out));
}

}  // namespace

void SessionLog::add(std::string stage, std::string kind, std::string text) {
  entries_.push_back({std::move(stage), std::move(kind), std::move(text)});
}

std::vector<std::string> SessionLog::warnings() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.kind == "warning" || e.kind == "clamp") out.push_back(e.stage + ": " + e.text);
  }
  return out;
}

int SessionLog::retries(const std::string& stage) const {
  return static_cast<int>(std::count_if(entries_.begin(), entries_.end(),
                                        [&](const LogEntry& e) { return e.stage == stage && e.kind == "retry"; }));
}

nlohmann::ordered_json SessionLog::to_json() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& e : entries_) out.push_back({{"stage", e.stage}, {"kind", e.kind}, {"text", e.text}});
  return out;
}

DescriptionList generate_descriptions(const std::string& prompt, ChatProvider& provider,
                                      const BridgeOptions& options, SessionLog& log) {
  if (trim(prompt).empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "prompt is empty", "prompt");
  const std::string system = options.templates.render(Stage::kDescriptions, {});
  std::function<Parsed<DescriptionList>(const std::string&)> parse = parse_description_list;
  return require(converse(Stage::kDescriptions, system, prompt, provider, options, log, parse), Stage::kDescriptions,
                 options.parse_retries);
}

std::vector<InstanceBox> generate_boxes(const std::string& prompt, const DescriptionList& descriptions,
                                        ChatProvider& provider, const BridgeOptions& options, SessionLog& log) {
  if (descriptions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "no descriptions to place", to_string(Stage::kBoxes));
  }
  std::string listing;
  std::vector<std::string> instances;
  for (const auto& d : descriptions) {
    listing += "(" + d.description + ", " + std::to_string(d.count) + ")\n";
    for (int k = 0; k < d.count; ++k) instances.push_back(d.description);
  }
  listing.pop_back();
  const std::string system = options.templates.render(Stage::kBoxes, {{"descriptions", listing}});
  std::function<Parsed<std::vector<InstanceBox>>(const std::string&)> parse = [&](const std::string& reply) {
    return match_boxes(parse_box_lines(reply), instances);
  };
  auto boxes = require(converse(Stage::kBoxes, system, prompt, provider, options, log, parse), Stage::kBoxes,
                       options.parse_retries);
  for (auto& b : boxes) {
    const Clamped c = clamp_box({b.box.xc, b.box.yc, b.box.w, b.box.h});
    if (c.changed) {
      log.add(to_string(Stage::kBoxes), "clamp",
              b.description + ": box " + box_text(b.box) + " clamped to " + box_text(c.box));
    }
    b.box = c.box;
  }
  return boxes;
}

ColorSet generate_colors(const std::string& prompt, const VisualConcept& vc, ChatProvider& provider,
                         const BridgeOptions& options, SessionLog& log) {
  const std::string stage = to_string(Stage::kColors);
  const std::string system =
      options.templates.render(Stage::kColors, {{"object", vc.description}, {"box", box_text(vc.box)}});
  std::function<Parsed<RgbList>(const std::string&)> parse = parse_rgb_list;
  auto result = converse(Stage::kColors, system, prompt, provider, options, log, parse);
  if (auto* failure = std::get_if<Exhausted>(&result)) {
    log.add(stage, "warning", vc.description + ": colors skipped, " + failure->message);
    return {};
  }
  const RgbList& list = std::get<RgbList>(result);
  if (list.empty_reply) {
    log.add(stage, "warning", vc.description + ": empty color reply");
    return {};
  }
  if (list.clamped > 0) {
    log.add(stage, "clamp", vc.description + ": " + std::to_string(list.clamped) + " RGB components clamped");
  }
  ColorSet colors;
  for (const Rgb& rgb : list.colors) {
    const int index = quantize_pixel(rgb);
    const bool seen = std::any_of(colors.entries.begin(), colors.entries.end(),
                                  [&](const ColorEntry& e) { return e.index == index; });
    if (!seen) colors.entries.push_back({index, std::nullopt});
    if (colors.entries.size() == kMaxColors) break;
  }
  return colors;
}

KeypointSet generate_keypoints(const std::string& prompt, const VisualConcept& vc, ChatProvider& provider,
                               const BridgeOptions& options, SessionLog& log) {
  const std::string stage = to_string(Stage::kKeypoints);
  const std::string system =
      options.templates.render(Stage::kKeypoints, {{"object", vc.description}, {"box", box_text(vc.box)}});
  std::function<Parsed<PointList>(const std::string&)> parse = parse_point_list;
  auto result = converse(Stage::kKeypoints, system, prompt, provider, options, log, parse);
  if (auto* failure = std::get_if<Exhausted>(&result)) {
    log.add(stage, "warning", vc.description + ": keypoints skipped, " + failure->message);
    return {};
  }
  const PointList& list = std::get<PointList>(result);
  if (list.empty_reply) {
    log.add(stage, "warning", vc.description + ": empty keypoint reply");
    return {};
  }
  KeypointSet out;
  int clamped = 0;
  for (const Point2& p : list.points) {
    if (out.points.size() == kMaxKeypoints) break;
    const Point2 q = clamp_into(p, vc.box);
    if (!(q == p)) ++clamped;
    out.points.push_back(q);
  }
  if (clamped > 0) {
    log.add(stage, "clamp", vc.description + ": " + std::to_string(clamped) + " keypoints clamped into the box");
  }
  if (list.points.size() > kMaxKeypoints) {
    log.add(stage, "warning", vc.description + ": kept the first 8 of " + std::to_string(list.points.size()) +
                                  " keypoints");
  }
  return out;
}

SemanticPanel text_to_panel(const std::string& prompt, ChatProvider& provider, const BridgeOptions& options,
                            SessionLog& log) {
  SemanticPanel panel;
  panel.prompt = prompt;
  const DescriptionList descriptions = generate_descriptions(prompt, provider, options, log);
  if (descriptions.empty()) {
    log.add(to_string(Stage::kDescriptions), "warning", "no visible elements; the panel is empty");
    return panel;
  }
  for (const auto& b : generate_boxes(prompt, descriptions, provider, options, log)) {
    VisualConcept vc;
    vc.id = fresh_concept_id(panel, 0);
    vc.description = b.description;
    vc.box = b.box;
    panel.concepts.push_back(std::move(vc));
  }
  for (auto& vc : panel.concepts) vc.colors = generate_colors(prompt, vc, provider, options, log);
  for (auto& vc : panel.concepts) vc.keypoints = generate_keypoints(prompt, vc, provider, options, log);
  require_valid(panel, kModule);
  return panel;
}

ChatEditResult chat_edit(const SemanticPanel& panel, const std::string& instruction, ChatProvider& provider,
                         const BridgeOptions& options, SessionLog& log) {
  if (trim(instruction).empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "instruction is empty", "instruction");
  }
  require_valid(panel, kModule);
  const std::string system = options.templates.render(Stage::kChatEdit, {{"panel", panel_to_json(panel)}});

  std::function<Parsed<SemanticPanel>(const std::string&)> parse = [&](const std::string& reply) {
    auto json = extract_json_object(reply);
    if (!json.ok()) return Parsed<SemanticPanel>::failure(json.issue.message);
    SemanticPanel edited;
    try {
      edited = panel_from_json_value(*json.value, {.validate = false, .allow_missing_ids = true});
    } catch (const Error& e) {
      std::string where = e.locus().empty() ? "" : " at " + e.locus();
      return Parsed<SemanticPanel>::failure(e.what() + where);
    }
    edited.prompt = panel.prompt;
    for (auto& vc : edited.concepts) {
      if (vc.id.empty()) vc.id = fresh_concept_id(edited, panel.version + 1);
    }
    // A concept that disappears under one id and reappears unchanged under
    // another had its id rewritten.
    for (const auto& before : panel.concepts) {
      if (edited.find(before.id) != nullptr) continue;
      for (const auto& after : edited.concepts) {
        if (panel.find(after.id) == nullptr && same_content(before, after)) {
          return Parsed<SemanticPanel>::failure("concept '" + before.id + "' was left unchanged but its id became '" +
                                                after.id + "'; keep the ids of untouched concepts");
        }
      }
    }
    const ValidationReport report = validate_panel(edited);
    if (!report.empty()) {
      const Violation& v = report.front();
      return Parsed<SemanticPanel>::failure("invalid panel: " + (v.concept_id.empty() ? "" : v.concept_id + ".") +
                                            v.field + ": " + v.message);
    }
    return Parsed<SemanticPanel>::success(std::move(edited));
  };

  SemanticPanel edited =
      require(converse(Stage::kChatEdit, system, instruction, provider, options, log, parse), Stage::kChatEdit,
              options.parse_retries);
  ChatEditResult result;
  result.ops = derive_edit_ops(panel, edited);
  if (result.ops.empty()) {
    result.panel = panel;
    return result;
  }
  edited.version = panel.version + 1;
  result.panel = std::move(edited);
  return result;
}

}  // namespace spanel
