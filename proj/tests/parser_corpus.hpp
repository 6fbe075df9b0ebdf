#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spanel/parsers.hpp"

namespace corpus {

struct Case {
  std::string name;
  std::function<bool()> check;
};

inline bool descriptions_are(std::string_view reply, const spanel::DescriptionList& expected) {
  const auto r = spanel::parse_description_list(reply);
  return r.ok() && *r.value == expected;
}

inline bool descriptions_fail(std::string_view reply, int line) {
  const auto r = spanel::parse_description_list(reply);
  return !r.ok() && r.issue.line == line && !r.issue.message.empty();
}

inline bool boxes_are(std::string_view reply, const std::vector<std::pair<std::string, std::array<double, 4>>>& expected) {
  const auto r = spanel::parse_box_lines(reply);
  if (!r.ok() || r.value->size() != expected.size()) return false;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if ((*r.value)[k].description != expected[k].first || (*r.value)[k].values != expected[k].second) return false;
  }
  return true;
}

inline bool boxes_fail(std::string_view reply, int line) {
  const auto r = spanel::parse_box_lines(reply);
  return !r.ok() && r.issue.line == line;
}

inline bool rgb_are(std::string_view reply, const std::vector<spanel::Rgb>& expected, int clamped = 0) {
  const auto r = spanel::parse_rgb_list(reply);
  return r.ok() && r.value->colors == expected && r.value->clamped == clamped && !r.value->empty_reply;
}

inline bool points_are(std::string_view reply, const std::vector<spanel::Point2>& expected) {
  const auto r = spanel::parse_point_list(reply);
  return r.ok() && r.value->points == expected;
}

// Canned replies in the shapes seen from chat models: clean, wrapped in prose
// or markdown, and broken.
inline std::vector<Case> cases() {
  using spanel::Rgb;
  std::vector<Case> c;

  // descriptions
  c.push_back({"descriptions: clean list", [] {
                 return descriptions_are("(red apple, 1)\n(brown mushroom, 2)", {{"red apple", 1}, {"brown mushroom", 2}});
               }});
  c.push_back({"descriptions: prose wrapped", [] {
                 return descriptions_are("Sure! Here are the objects (as requested):\n1. (a white cat, 1)\n2. (a blue ball, 3)\nHope this helps.",
                                         {{"a white cat", 1}, {"a blue ball", 3}});
               }});
  c.push_back({"descriptions: several pairs per line", [] {
                 return descriptions_are("Objects: (dog, 2), (tree, 1)", {{"dog", 2}, {"tree", 1}});
               }});
  c.push_back({"descriptions: quoted and spaced", [] {
                 return descriptions_are("( \"green leaf\" ,  4 )", {{"green leaf", 4}});
               }});
  c.push_back({"descriptions: repeated entries are summed", [] {
                 return descriptions_are("(cat, 1)\n(dog, 1)\n(cat, 2)", {{"cat", 3}, {"dog", 1}});
               }});
  c.push_back({"descriptions: comma inside description", [] {
                 return descriptions_are("(small, round table, 1)", {{"small, round table", 1}});
               }});
  c.push_back({"descriptions: word count is malformed", [] { return descriptions_fail("(cat, 1)\n(dog, three)", 2); }});
  c.push_back({"descriptions: zero count is malformed", [] { return descriptions_fail("(cat, 0)", 1); }});
  c.push_back({"descriptions: negative count is malformed", [] { return descriptions_fail("\n\n(cat, -2)", 3); }});
  c.push_back({"descriptions: empty description", [] { return descriptions_fail("(, 2)", 1); }});
  c.push_back({"descriptions: no pairs at all", [] { return descriptions_fail("I cannot identify any objects here.", 0); }});
  c.push_back({"descriptions: explicit none", [] { return descriptions_are("(none)", {}); }});
  c.push_back({"descriptions: blank reply", [] { return descriptions_are("   \n", {}); }});
  c.push_back({"descriptions: CRLF line endings", [] {
                 return descriptions_are("(cat, 1)\r\n(dog, 2)\r\n", {{"cat", 1}, {"dog", 2}});
               }});

  // boxes
  c.push_back({"boxes: clean", [] {
                 return boxes_are("red apple: [0.3, 0.6, 0.3, 0.3]\nbrown mushroom: [0.7, 0.6, 0.25, 0.35]",
                                  {{"red apple", {0.3, 0.6, 0.3, 0.3}}, {"brown mushroom", {0.7, 0.6, 0.25, 0.35}}});
               }});
  c.push_back({"boxes: list markers and quotes", [] {
                 return boxes_are("- \"cat\" = [0.5, 0.5, 0.2, 0.2]\n2) dog - [0.1, 0.2, 0.1, 0.1]",
                                  {{"cat", {0.5, 0.5, 0.2, 0.2}}, {"dog", {0.1, 0.2, 0.1, 0.1}}});
               }});
  c.push_back({"boxes: prose around and markdown", [] {
                 return boxes_are("Here is the layout:\n```\n* tree: [0.2, 0.4, 0.3, 0.7]\n```\nLet me know!",
                                  {{"tree", {0.2, 0.4, 0.3, 0.7}}});
               }});
  c.push_back({"boxes: unlabelled", [] { return boxes_are("[0.5, 0.5, 1, 1]", {{"", {0.5, 0.5, 1, 1}}}); }});
  c.push_back({"boxes: two on one line", [] {
                 return boxes_are("cat: [0.2, 0.5, 0.1, 0.1], dog: [0.8, 0.5, 0.1, 0.1]",
                                  {{"cat", {0.2, 0.5, 0.1, 0.1}}, {"dog", {0.8, 0.5, 0.1, 0.1}}});
               }});
  c.push_back({"boxes: three numbers is malformed", [] { return boxes_fail("cat: [0.5, 0.5, 0.2, 0.2]\ndog: [0.5, 0.5, 0.2]", 2); }});
  c.push_back({"boxes: no boxes", [] { return boxes_fail("The cat sits on the left.", 0); }});
  c.push_back({"boxes: non numeric brackets ignored", [] {
                 return boxes_are("[note] cat: [0.5, 0.5, 0.2, 0.2]", {{"[note] cat", {0.5, 0.5, 0.2, 0.2}}});
               }});
  c.push_back({"boxes: clamp out of range", [] {
                 const auto k = spanel::clamp_box({1.4, -0.2, 0.0, 2.0});
                 return k.changed && k.box == spanel::BoundingBox{1.0, 0.0, spanel::kMinBoxExtent, 1.0};
               }});
  c.push_back({"boxes: clamp leaves valid boxes", [] {
                 const auto k = spanel::clamp_box({0.5, 0.5, 0.2, 0.2});
                 return !k.changed && k.box == spanel::BoundingBox{0.5, 0.5, 0.2, 0.2};
               }});
  c.push_back({"boxes: clamp NaN", [] {
                 const auto k = spanel::clamp_box({std::nan(""), 0.5, 0.2, 0.2});
                 return k.changed && k.box.xc == 0.0;
               }});

  // colors
  c.push_back({"colors: parenthesised", [] { return rgb_are("(255, 0, 0)\n(120, 60, 20)", {Rgb{255, 0, 0}, Rgb{120, 60, 20}}); }});
  c.push_back({"colors: bracketed with prose", [] {
                 return rgb_are("The apple is mostly [200, 30, 40] with a stem of (90, 60, 30).", {Rgb{200, 30, 40}, Rgb{90, 60, 30}});
               }});
  c.push_back({"colors: out of range is clamped and counted", [] { return rgb_are("(300, -5, 12.4)", {Rgb{255, 0, 12}}, 3); }});
  c.push_back({"colors: none", [] {
                 const auto r = spanel::parse_rgb_list("None.");
                 return r.ok() && r.value->empty_reply && r.value->colors.empty();
               }});
  c.push_back({"colors: prose only", [] { return !spanel::parse_rgb_list("It is reddish.").ok(); }});
  c.push_back({"colors: pairs are not colors", [] { return !spanel::parse_rgb_list("(1, 2)").ok(); }});

  // keypoints
  c.push_back({"keypoints: mixed brackets", [] {
                 return points_are("[0.1, 0.2]\n(0.3, 0.4)", {{0.1, 0.2}, {0.3, 0.4}});
               }});
  c.push_back({"keypoints: list in one line", [] {
                 return points_are("Keypoints: [0.5, 0.5], [0.55, 0.6], [0.45, 0.62]", {{0.5, 0.5}, {0.55, 0.6}, {0.45, 0.62}});
               }});
  c.push_back({"keypoints: nested outer list", [] {
                 return points_are("[[0.2, 0.3], [0.4, 0.5]]", {{0.2, 0.3}, {0.4, 0.5}});
               }});
  c.push_back({"keypoints: none", [] {
                 const auto r = spanel::parse_point_list("none");
                 return r.ok() && r.value->empty_reply;
               }});
  c.push_back({"keypoints: garbage", [] { return !spanel::parse_point_list("top of the head").ok(); }});

  // JSON replies
  c.push_back({"json: fenced", [] {
                 const auto r = spanel::extract_json_object("Here you go:\n```json\n{\"a\": 1}\n```\nDone.");
                 return r.ok() && (*r.value)["a"] == 1;
               }});
  c.push_back({"json: bare with prose", [] {
                 const auto r = spanel::extract_json_object("Result: {\"concepts\": []} as requested");
                 return r.ok() && r.value->contains("concepts");
               }});
  c.push_back({"json: truncated", [] { return !spanel::extract_json_object("{\"concepts\": [").ok(); }});
  c.push_back({"json: array is not an object", [] { return !spanel::extract_json_object("```\n[1, 2]\n```").ok(); }});
  c.push_back({"json: nothing", [] { return !spanel::extract_json_object("no json here").ok(); }});
  c.push_back({"json: trailing comma", [] { return !spanel::extract_json_object("{\"a\": 1,}").ok(); }});
  return c;
}

}  // namespace corpus
