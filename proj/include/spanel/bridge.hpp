#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "spanel/core.hpp"
#include "spanel/edit.hpp"
#include "spanel/llm.hpp"
#include "spanel/parsers.hpp"
#include "spanel/prompts.hpp"

namespace spanel {

struct LogEntry {
  std::string stage;
  // system | user | assistant | retry | warning | clamp
  std::string kind;
  std::string text;
};

// Full conversation of one bridge run, in call order.
class SessionLog {
 public:
  void add(std::string stage, std::string kind, std::string text);
  const std::vector<LogEntry>& entries() const { return entries_; }
  std::vector<std::string> warnings() const;
  int retries(const std::string& stage) const;
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<LogEntry> entries_;
};

struct BridgeOptions {
  PromptTemplateSet templates = PromptTemplateSet::defaults();
  ChatParams params;
  // Extra attempts after an unparseable reply.
  int parse_retries = 3;
};

struct InstanceBox {
  std::string description;
  BoundingBox box;
};

DescriptionList generate_descriptions(const std::string& prompt, ChatProvider& provider,
                                      const BridgeOptions& options, SessionLog& log);

// One box per expanded instance, in description order.
std::vector<InstanceBox> generate_boxes(const std::string& prompt, const DescriptionList& descriptions,
                                        ChatProvider& provider, const BridgeOptions& options, SessionLog& log);

ColorSet generate_colors(const std::string& prompt, const VisualConcept& vc, ChatProvider& provider,
                         const BridgeOptions& options, SessionLog& log);

KeypointSet generate_keypoints(const std::string& prompt, const VisualConcept& vc, ChatProvider& provider,
                               const BridgeOptions& options, SessionLog& log);

// Descriptions, boxes, colors, keypoints in that order. Concept ids are
// c0_1, c0_2, ... and the panel has version 0.
SemanticPanel text_to_panel(const std::string& prompt, ChatProvider& provider, const BridgeOptions& options,
                            SessionLog& log);

struct ChatEditResult {
  SemanticPanel panel;
  std::vector<EditOp> ops;
};

// The returned panel has version + 1, or equals the input when the reply
// changes nothing.
ChatEditResult chat_edit(const SemanticPanel& panel, const std::string& instruction, ChatProvider& provider,
                         const BridgeOptions& options, SessionLog& log);

}  // namespace spanel
