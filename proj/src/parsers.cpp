#include "spanel/parsers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

namespace spanel {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim_view(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    parts.push_back(trim_view(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

// A bracketed group on one line: the text between `open` and the next
// `close`, provided no other opener intervenes.
struct Group {
  std::size_t begin;    // position of the opener
  std::size_t end;      // position of the closer
  std::string_view body;
};

std::vector<Group> find_groups(std::string_view line, char open, char close) {
  std::vector<Group> groups;
  std::size_t pos = 0;
  while ((pos = line.find(open, pos)) != std::string_view::npos) {
    const std::size_t end = line.find(close, pos + 1);
    if (end == std::string_view::npos) break;
    const std::size_t inner_open = line.find(open, pos + 1);
    if (inner_open != std::string_view::npos && inner_open < end) {
      pos = inner_open;
      continue;
    }
    groups.push_back({pos, end, line.substr(pos + 1, end - pos - 1)});
    pos = end + 1;
  }
  return groups;
}

std::vector<Group> find_any_groups(std::string_view line) {
  auto groups = find_groups(line, '(', ')');
  auto square = find_groups(line, '[', ']');
  groups.insert(groups.end(), square.begin(), square.end());
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.begin < b.begin; });
  return groups;
}

std::optional<std::vector<double>> numeric_fields(std::string_view body) {
  std::vector<double> out;
  for (auto part : split_commas(body)) {
    auto v = parse_number(part);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::string strip_quotes(std::string_view s) {
  s = trim_view(s);
  while (!s.empty() && (s.front() == '"' || s.front() == '\'' || s.front() == '`')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '`')) s.remove_suffix(1);
  return std::string(trim_view(s));
}

bool is_empty_marker(std::string_view reply) {
  std::string t = to_lower(trim_view(reply));
  std::erase_if(t, [](char c) { return c == '(' || c == ')' || c == '.' || c == '`' || c == '"'; });
  t = trim(t);
  return t.empty() || t == "none" || t == "[]" || t == "empty" || t == "no objects" || t == "nothing";
}

std::string clean_label(std::string_view s) {
  s = trim_view(s);
  // list markers: "-", "*", "•", "1.", "2)"
  for (;;) {
    if (s.starts_with("-") || s.starts_with("*") || s.starts_with("(") || s.starts_with(",") || s.starts_with(";")) {
      s.remove_prefix(1);
    } else if (s.starts_with("\xE2\x80\xA2")) {
      s.remove_prefix(3);
    } else {
      std::size_t d = 0;
      while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
      if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) {
        s.remove_prefix(d + 1);
      } else {
        break;
      }
    }
    s = trim_view(s);
  }
  while (!s.empty() && (s.back() == ':' || s.back() == '=' || s.back() == '-' || s.back() == ',' ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.remove_suffix(1);
  }
  return strip_quotes(s);
}

}  // namespace

Parsed<DescriptionList> parse_description_list(std::string_view reply) {
  DescriptionList list;
  std::map<std::string, std::size_t> position;
  const auto lines = split_lines(reply);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    for (const auto& g : find_groups(lines[ln], '(', ')')) {
      const std::size_t comma = g.body.rfind(',');
      if (comma == std::string_view::npos) continue;
      const std::string description = strip_quotes(g.body.substr(0, comma));
      const std::string_view count_text = trim_view(g.body.substr(comma + 1));
      const bool single_word = !count_text.empty() &&
                               std::none_of(count_text.begin(), count_text.end(),
                                            [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
      if (!single_word) continue;  // prose in parentheses
      const int line_no = static_cast<int>(ln) + 1;
      int count = 0;
      auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
      if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count <= 0) {
        return Parsed<DescriptionList>::failure("count '" + std::string(count_text) + "' is not a positive integer",
                                                line_no);
      }
      if (description.empty()) return Parsed<DescriptionList>::failure("empty description", line_no);
      auto [it, inserted] = position.try_emplace(description, list.size());
      if (inserted) {
        list.push_back({description, count});
      } else {
        list[it->second].count += count;
      }
    }
  }
  if (list.empty()) {
    bool marker = is_empty_marker(reply);
    for (auto line : lines) marker = marker || (!trim_view(line).empty() && is_empty_marker(line) && trim_view(line).find("none") != std::string_view::npos);
    if (!marker) return Parsed<DescriptionList>::failure("no (description, count) pairs found");
  }
  return Parsed<DescriptionList>::success(std::move(list));
}

Parsed<std::vector<BoxLine>> parse_box_lines(std::string_view reply) {
  std::vector<BoxLine> boxes;
  const auto lines = split_lines(reply);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string_view line = lines[ln];
    std::size_t label_start = 0;
    for (const auto& g : find_groups(line, '[', ']')) {
      auto fields = numeric_fields(g.body);
      if (!fields) continue;
      const int line_no = static_cast<int>(ln) + 1;
      if (fields->size() != 4) {
        return Parsed<std::vector<BoxLine>>::failure(
            "box needs 4 numbers [x_c, y_c, w, h], got " + std::to_string(fields->size()), line_no);
      }
      BoxLine b;
      b.description = clean_label(line.substr(label_start, g.begin - label_start));
      std::copy(fields->begin(), fields->end(), b.values.begin());
      b.line = line_no;
      boxes.push_back(std::move(b));
      label_start = g.end + 1;
    }
  }
  if (boxes.empty()) return Parsed<std::vector<BoxLine>>::failure("no [x_c, y_c, w, h] boxes found");
  return Parsed<std::vector<BoxLine>>::success(std::move(boxes));
}

Clamped clamp_box(const std::array<double, 4>& raw) {
  Clamped out;
  auto clamp = [&](double v, double lo, double hi) {
    double c = std::isnan(v) ? lo : std::clamp(v, lo, hi);
    if (c != v) out.changed = true;
    return c;
  };
  out.box = {clamp(raw[0], 0.0, 1.0), clamp(raw[1], 0.0, 1.0), clamp(raw[2], kMinBoxExtent, 1.0),
             clamp(raw[3], kMinBoxExtent, 1.0)};
  return out;
}

Parsed<RgbList> parse_rgb_list(std::string_view reply) {
  RgbList out;
  const auto lines = split_lines(reply);
  for (auto line : lines) {
    for (const auto& g : find_any_groups(line)) {
      auto fields = numeric_fields(g.body);
      if (!fields || fields->size() != 3) continue;
      std::array<std::uint8_t, 3> c{};
      for (int k = 0; k < 3; ++k) {
        double v = (*fields)[k];
        double r = std::isnan(v) ? 0.0 : std::clamp(std::round(v), 0.0, 255.0);
        if (r != v) ++out.clamped;
        c[k] = static_cast<std::uint8_t>(r);
      }
      out.colors.push_back({c[0], c[1], c[2]});
    }
  }
  if (out.colors.empty()) {
    if (!is_empty_marker(reply)) return Parsed<RgbList>::failure("no (R, G, B) triples found");
    out.empty_reply = true;
  }
  return Parsed<RgbList>::success(std::move(out));
}

Parsed<PointList> parse_point_list(std::string_view reply) {
  PointList out;
  for (auto line : split_lines(reply)) {
    for (const auto& g : find_any_groups(line)) {
      auto fields = numeric_fields(g.body);
      if (!fields || fields->size() != 2) continue;
      if (!std::isfinite((*fields)[0]) || !std::isfinite((*fields)[1])) continue;
      out.points.push_back({(*fields)[0], (*fields)[1]});
    }
  }
  if (out.points.empty()) {
    if (!is_empty_marker(reply)) return Parsed<PointList>::failure("no [x, y] keypoints found");
    out.empty_reply = true;
  }
  return Parsed<PointList>::success(std::move(out));
}

Parsed<nlohmann::json> extract_json_object(std::string_view reply) {
  std::string_view candidate;
  const std::size_t fence = reply.find("```");
  if (fence != std::string_view::npos) {
    const std::size_t body = reply.find('\n', fence);
    const std::size_t close = body == std::string_view::npos ? std::string_view::npos : reply.find("```", body);
    if (close != std::string_view::npos) candidate = reply.substr(body + 1, close - body - 1);
  }
  if (candidate.find('{') == std::string_view::npos) {
    const std::size_t first = reply.find('{');
    const std::size_t last = reply.rfind('}');
    if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
      return Parsed<nlohmann::json>::failure("reply contains no JSON object");
    }
    candidate = reply.substr(first, last - first + 1);
  }
  nlohmann::json value = nlohmann::json::parse(candidate.begin(), candidate.end(), nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) return Parsed<nlohmann::json>::failure("reply JSON is malformed");
  if (!value.is_object()) return Parsed<nlohmann::json>::failure("reply JSON is not an object");
  return Parsed<nlohmann::json>::success(std::move(value));
}

}  // namespace spanel
