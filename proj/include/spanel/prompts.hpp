#pragma once

#include <map>
#include <string>

namespace spanel {

enum class Stage { kDescriptions, kBoxes, kColors, kKeypoints, kChatEdit };

const char* to_string(Stage stage);

// One system-prompt template per stage. Placeholders are written {{name}}.
class PromptTemplateSet {
 public:
  // The templates shipped under assets/prompts/.
  static PromptTemplateSet defaults();
  // Reads <dir>/<stage>.txt for every stage; missing files keep the default.
  static PromptTemplateSet load_dir(const std::string& dir);

  const std::string& raw(Stage stage) const { return templates_.at(stage); }
  void set(Stage stage, std::string text) { templates_[stage] = std::move(text); }

  // Fills every placeholder. Throws Error(kInvalidArgument) when a
  // placeholder has no value or a value names no placeholder.
  std::string render(Stage stage, const std::map<std::string, std::string>& values) const;

 private:
  std::map<Stage, std::string> templates_;
};

}  // namespace spanel
