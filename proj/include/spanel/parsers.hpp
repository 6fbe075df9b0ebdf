#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spanel/core.hpp"
#include "spanel/palette.hpp"

namespace spanel {

// Structured failure of a reply parser. `line` is 1-based, 0 when the
// problem concerns the reply as a whole.
struct ParseIssue {
  std::string message;
  int line = 0;
};

// Either a value or a ParseIssue. Parsers never throw on any input text.
template <class T>
struct Parsed {
  std::optional<T> value;
  ParseIssue issue;

  bool ok() const { return value.has_value(); }
  static Parsed success(T v) { return Parsed{std::move(v), {}}; }
  static Parsed failure(std::string message, int line = 0) { return Parsed{std::nullopt, {std::move(message), line}}; }
};

struct DescriptionEntry {
  std::string description;
  int count = 1;
  friend bool operator==(const DescriptionEntry&, const DescriptionEntry&) = default;
};

using DescriptionList = std::vector<DescriptionEntry>;

// Lines carrying "(description, count)" pairs; any other text is ignored.
// A pair whose second field is a single word but not a positive integer
// (e.g. "(cat, three)") is malformed. "(none)" alone marks an empty scene.
// Repeated descriptions have their counts summed.
Parsed<DescriptionList> parse_description_list(std::string_view reply);

struct BoxLine {
  std::string description;  // text before the bracket, may be empty
  std::array<double, 4> values{};
  int line = 0;
};

// Every "[a, b, c, d]" group, with the label written before it on the same
// line. A bracketed number list of another length is malformed.
Parsed<std::vector<BoxLine>> parse_box_lines(std::string_view reply);

struct Clamped {
  BoundingBox box;
  bool changed = false;
};

inline constexpr double kMinBoxExtent = 0.01;

// xc, yc into [0,1]; w, h into [kMinBoxExtent, 1]. Non-finite values fall
// back to the nearest bound.
Clamped clamp_box(const std::array<double, 4>& raw);

struct RgbList {
  std::vector<Rgb> colors;
  bool empty_reply = false;  // blank or "none"
  int clamped = 0;           // components pulled into [0, 255]
};

// "(R, G, B)" or "[R, G, B]" triples.
Parsed<RgbList> parse_rgb_list(std::string_view reply);

struct PointList {
  std::vector<Point2> points;
  bool empty_reply = false;
};

// "[x, y]" or "(x, y)" pairs.
Parsed<PointList> parse_point_list(std::string_view reply);

// The JSON object in a reply: the first ```json fence (or any ``` fence)
// when present, otherwise the span from the first '{' to the last '}'.
Parsed<nlohmann::json> extract_json_object(std::string_view reply);

}  // namespace spanel
