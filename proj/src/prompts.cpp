#include "spanel/prompts.hpp"

#include <filesystem>
#include <set>

#include "spanel/assets.hpp"
#include "spanel/error.hpp"
#include "spanel/image_io.hpp"

namespace spanel {

namespace {

constexpr Stage kStages[] = {Stage::kDescriptions, Stage::kBoxes, Stage::kColors, Stage::kKeypoints, Stage::kChatEdit};

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::kDescriptions: return "descriptions";
    case Stage::kBoxes: return "boxes";
    case Stage::kColors: return "colors";
    case Stage::kKeypoints: return "keypoints";
    case Stage::kChatEdit: return "chat_edit";
  }
  return "unknown";
}

PromptTemplateSet PromptTemplateSet::defaults() {
  PromptTemplateSet set;
  for (Stage s : kStages) set.templates_[s] = std::string(assets::get(std::string("prompts/") + to_string(s) + ".txt"));
  return set;
}

PromptTemplateSet PromptTemplateSet::load_dir(const std::string& dir) {
  PromptTemplateSet set = defaults();
  for (Stage s : kStages) {
    const auto path = std::filesystem::path(dir) / (std::string(to_string(s)) + ".txt");
    if (std::filesystem::exists(path)) set.templates_[s] = read_file(path.string());
  }
  return set;
}

std::string PromptTemplateSet::render(Stage stage, const std::map<std::string, std::string>& values) const {
  const std::string& tpl = raw(stage);
  std::string out;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const std::size_t open = tpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tpl.find("}}", open + 2);
    if (close == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "llm-bridge", "unterminated placeholder", to_string(stage));
    }
    out.append(tpl, pos, open - pos);
    const std::string name = tpl.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::kInvalidArgument, "llm-bridge", "placeholder {{" + name + "}} has no value",
                  to_string(stage));
    }
    out += it->second;
    used.insert(name);
    pos = close + 2;
  }
  for (const auto& [name, _] : values) {
    if (!used.count(name)) {
      throw Error(ErrorCode::kInvalidArgument, "llm-bridge", "template has no placeholder {{" + name + "}}",
                  to_string(stage));
    }
  }
  return out;
}

}  // namespace spanel
