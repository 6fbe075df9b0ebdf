#include "spanel/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "spanel/assets.hpp"
#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "data-pipeline";

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::vector<std::string> data_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(start, end - start));
    if (!line.empty() && line.front() != '#') out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}

bool overlap(double a1, double a2, double b1, double b2) { return a1 < b2 && b1 < a2; }

const char* number_word(int n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five"};
  return words[n];
}

struct Group {
  const PoolObject* object = nullptr;
  const ColorWord* color = nullptr;
  int count = 1;

  std::string description() const { return color ? color->word + " " + object->singular : object->singular; }

  std::string phrase() const {
    const std::string adj = color ? color->word + " " : "";
    if (count > 1) return std::string(number_word(count)) + " " + adj + object->plural;
    const std::string noun = adj + object->singular;
    const bool vowel = std::string_view("aeiou").find(noun.front()) != std::string_view::npos;
    return (vowel ? "an " : "a ") + noun;
  }
};

Corners corners_at(double x1, double y1, double w, double h) { return {x1, y1, x1 + w, y1 + h}; }

bool on_canvas(const Corners& c) { return c.x1 >= 0 && c.y1 >= 0 && c.x2 <= 1 && c.y2 <= 1; }

// Boxes for every concept in role order, or empty when this draw does not fit.
std::vector<Corners> place(std::mt19937_64& rng, Relation relation, const std::vector<Group>& groups) {
  std::vector<std::pair<double, double>> sizes;
  for (std::size_t g = 0; g < groups.size(); ++g) sizes.emplace_back(uniform(rng, 0.08, 0.22), uniform(rng, 0.08, 0.22));
  std::vector<Corners> out;
  switch (relation) {
    case Relation::kLeftOf:
    case Relation::kRightOf:
    case Relation::kAbove:
    case Relation::kBelow: {
      const double split = uniform(rng, 0.35, 0.65);
      const bool horizontal = relation == Relation::kLeftOf || relation == Relation::kRightOf;
      const bool subject_first = relation == Relation::kLeftOf || relation == Relation::kAbove;
      for (std::size_t g = 0; g < 2; ++g) {
        const bool low_side = (g == 0) == subject_first;
        const auto [w, h] = sizes[g];
        const double along = horizontal ? w : h;
        const double lo = low_side ? 0.0 : split + 0.005;
        const double hi = low_side ? split - 0.005 - along : 1.0 - along;
        for (int k = 0; k < groups[g].count; ++k) {
          const double a = uniform(rng, lo, hi);
          const double b = uniform(rng, 0.0, 1.0 - (horizontal ? h : w));
          out.push_back(horizontal ? corners_at(a, b, w, h) : corners_at(b, a, w, h));
        }
      }
      break;
    }
    case Relation::kNextTo: {
      const auto [wa, ha] = sizes[0];
      const auto [wb, hb] = sizes[1];
      const Corners a = corners_at(uniform(rng, 0.0, 1.0 - wa), uniform(rng, 0.0, 1.0 - ha), wa, ha);
      const double gap = uniform(rng, 0.005, kNextToGap - 0.005);
      const double x1 = (rng() & 1) ? a.x2 + gap : a.x1 - gap - wb;
      const double yc = uniform(rng, a.y1 + 0.005, a.y2 - 0.005);
      out = {a, corners_at(x1, yc - hb / 2, wb, hb)};
      break;
    }
    case Relation::kBetween: {
      const double g1 = uniform(rng, 0.02, 0.15);
      const double g2 = uniform(rng, 0.02, 0.15);
      const double total = sizes[1].first + g1 + sizes[0].first + g2 + sizes[2].first;
      if (total > 1.0) return {};
      const double start = uniform(rng, 0.0, 1.0 - total);
      const double band = uniform(rng, 0.15, 0.85);
      auto at = [&](std::size_t g, double x1) {
        const auto [w, h] = sizes[g];
        const double yc = band + uniform(rng, -0.3, 0.3) * std::min({sizes[0].second, sizes[1].second, sizes[2].second});
        return corners_at(x1, yc - h / 2, w, h);
      };
      const Corners left = at(1, start);
      const Corners middle = at(0, left.x2 + g1);
      const Corners right = at(2, middle.x2 + g2);
      out = {middle, left, right};
      break;
    }
    case Relation::kSurroundedBy: {
      const auto [wa, ha] = sizes[0];
      const auto [wb, hb] = sizes[1];
      const Corners a = corners_at(uniform(rng, 0.4, 0.6) - wa / 2, uniform(rng, 0.4, 0.6) - ha / 2, wa, ha);
      const double acx = (a.x1 + a.x2) / 2;
      const double acy = (a.y1 + a.y2) / 2;
      auto gap = [&] { return uniform(rng, 0.01, 0.06); };
      auto jitter = [&](double extent) { return uniform(rng, -0.3, 0.3) * extent; };
      out = {a,
             corners_at(a.x1 - gap() - wb, acy + jitter(ha) - hb / 2, wb, hb),
             corners_at(a.x2 + gap(), acy + jitter(ha) - hb / 2, wb, hb),
             corners_at(acx + jitter(wa) - wb / 2, a.y1 - gap() - hb, wb, hb),
             corners_at(acx + jitter(wa) - wb / 2, a.y2 + gap(), wb, hb)};
      break;
    }
  }
  return out;
}

}  // namespace

const char* to_string(Relation relation) {
  switch (relation) {
    case Relation::kLeftOf: return "left of";
    case Relation::kRightOf: return "right of";
    case Relation::kAbove: return "above";
    case Relation::kBelow: return "below";
    case Relation::kNextTo: return "next to";
    case Relation::kBetween: return "between";
    case Relation::kSurroundedBy: return "surrounded by";
  }
  return "?";
}

Relation relation_from_string(std::string_view text) {
  std::string key = to_lower(trim(text));
  std::replace(key.begin(), key.end(), '_', ' ');
  std::replace(key.begin(), key.end(), '-', ' ');
  if (key.starts_with("on the ")) key = key.substr(7);
  for (Relation r : kAllRelations) {
    if (key == to_string(r)) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, kModule, "unknown relation '" + std::string(text) + "'", "relation");
}

ObjectPool ObjectPool::from_text(std::string_view objects, std::string_view colors) {
  ObjectPool pool;
  for (const auto& line : data_lines(objects)) {
    const auto bar = line.find('|');
    if (bar == std::string::npos) {
      pool.objects.push_back({line, line + "s"});
    } else {
      pool.objects.push_back({trim(line.substr(0, bar)), trim(line.substr(bar + 1))});
    }
  }
  for (const auto& line : data_lines(colors)) {
    ColorWord c;
    int rgb[3] = {0, 0, 0};
    std::size_t pos = line.find(',');
    c.word = trim(line.substr(0, pos));
    for (int k = 0; k < 3 && pos != std::string::npos; ++k) {
      const std::size_t next = line.find(',', pos + 1);
      rgb[k] = std::stoi(line.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1));
      pos = next;
    }
    c.rgb = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]), static_cast<std::uint8_t>(rgb[2])};
    pool.colors.push_back(std::move(c));
  }
  return pool;
}

const ObjectPool& ObjectPool::shipped() {
  static const ObjectPool pool = from_text(assets::get("object_pool.txt"), assets::get("color_words.txt"));
  return pool;
}

bool overlaps_vertically(const BoundingBox& a, const BoundingBox& b) {
  const Corners p = box_corners(a);
  const Corners q = box_corners(b);
  return overlap(p.y1, p.y2, q.y1, q.y2);
}

bool overlaps_horizontally(const BoundingBox& a, const BoundingBox& b) {
  const Corners p = box_corners(a);
  const Corners q = box_corners(b);
  return overlap(p.x1, p.x2, q.x1, q.x2);
}

bool left_of(const BoundingBox& a, const BoundingBox& b) { return box_corners(a).x2 <= box_corners(b).x1; }
bool right_of(const BoundingBox& a, const BoundingBox& b) { return box_corners(a).x1 >= box_corners(b).x2; }
bool above(const BoundingBox& a, const BoundingBox& b) { return box_corners(a).y2 <= box_corners(b).y1; }
bool below(const BoundingBox& a, const BoundingBox& b) { return box_corners(a).y1 >= box_corners(b).y2; }

bool next_to(const BoundingBox& a, const BoundingBox& b) {
  if (!overlaps_vertically(a, b)) return false;
  const Corners p = box_corners(a);
  const Corners q = box_corners(b);
  const double gap = std::max(q.x1 - p.x2, p.x1 - q.x2);
  return gap >= 0.0 && gap <= kNextToGap;
}

bool satisfies_relation(const PseudoSample& sample) {
  const auto& concepts = sample.panel.concepts;
  if (sample.roles.size() != concepts.size()) return false;
  std::vector<const BoundingBox*> role[3];
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (sample.roles[i] < 0 || sample.roles[i] > 2) return false;
    role[sample.roles[i]].push_back(&concepts[i].box);
  }
  if (role[0].empty() || role[1].empty()) return false;
  auto all_pairs = [&](int r, auto&& pred) {
    for (const auto* a : role[0]) {
      for (const auto* b : role[r]) {
        if (!pred(*a, *b)) return false;
      }
    }
    return true;
  };
  switch (sample.relation) {
    case Relation::kLeftOf: return role[2].empty() && all_pairs(1, left_of);
    case Relation::kRightOf: return role[2].empty() && all_pairs(1, right_of);
    case Relation::kAbove: return role[2].empty() && all_pairs(1, above);
    case Relation::kBelow: return role[2].empty() && all_pairs(1, below);
    case Relation::kNextTo: return role[2].empty() && all_pairs(1, next_to);
    case Relation::kBetween:
      return !role[2].empty() && all_pairs(1, [](const BoundingBox& a, const BoundingBox& b) {
               return right_of(a, b) && overlaps_vertically(a, b);
             }) && all_pairs(2, [](const BoundingBox& a, const BoundingBox& b) {
               return left_of(a, b) && overlaps_vertically(a, b);
             });
    case Relation::kSurroundedBy: {
      if (!role[2].empty() || role[0].size() != 1 || role[1].size() != 4) return false;
      const BoundingBox& a = *role[0][0];
      const BoundingBox& l = *role[1][0];
      const BoundingBox& r = *role[1][1];
      const BoundingBox& t = *role[1][2];
      const BoundingBox& b = *role[1][3];
      return left_of(l, a) && overlaps_vertically(l, a) && right_of(r, a) && overlaps_vertically(r, a) &&
             above(t, a) && overlaps_horizontally(t, a) && below(b, a) && overlaps_horizontally(b, a);
    }
  }
  return false;
}

PseudoSample gen_pseudo_sample(std::uint64_t seed, Relation relation, const ObjectPool& pool,
                               const PseudoOptions& options) {
  const std::size_t groups_needed = relation == Relation::kBetween ? 3 : 2;
  if (pool.objects.size() < groups_needed) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "object pool needs at least " + std::to_string(groups_needed) + " objects", "pool");
  }
  std::mt19937_64 rng(seed);
  std::vector<Group> groups(groups_needed);
  std::vector<std::size_t> chosen;
  for (auto& g : groups) {
    std::size_t idx;
    do {
      idx = pick(rng, pool.objects.size());
    } while (std::find(chosen.begin(), chosen.end(), idx) != chosen.end());
    chosen.push_back(idx);
    g.object = &pool.objects[idx];
    const bool colored = !pool.colors.empty() && (rng() & 1);
    if (colored) g.color = &pool.colors[pick(rng, pool.colors.size())];
  }
  switch (relation) {
    case Relation::kLeftOf:
    case Relation::kRightOf:
    case Relation::kAbove:
    case Relation::kBelow:
      for (auto& g : groups) g.count = 1 + static_cast<int>(pick(rng, 3));
      break;
    case Relation::kSurroundedBy:
      groups[1].count = 4;
      break;
    default:
      break;
  }

  PseudoSample sample;
  sample.relation = relation;
  const std::string a = groups[0].phrase();
  const std::string b = groups[1].phrase();
  switch (relation) {
    case Relation::kLeftOf: sample.prompt = a + " on the left of " + b; break;
    case Relation::kRightOf: sample.prompt = a + " on the right of " + b; break;
    case Relation::kBetween: sample.prompt = a + " between " + b + " and " + groups[2].phrase(); break;
    default: sample.prompt = a + " " + to_string(relation) + " " + b; break;
  }
  sample.panel.prompt = sample.prompt;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int k = 0; k < groups[g].count; ++k) {
      VisualConcept vc;
      vc.id = fresh_concept_id(sample.panel, 0);
      vc.description = groups[g].description();
      if (groups[g].color) vc.colors.entries.push_back({quantize_pixel(groups[g].color->rgb), std::nullopt});
      sample.panel.concepts.push_back(std::move(vc));
      sample.roles.push_back(static_cast<int>(g));
    }
  }

  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const std::vector<Corners> boxes = place(rng, relation, groups);
    if (boxes.size() != sample.panel.concepts.size()) continue;
    if (!std::all_of(boxes.begin(), boxes.end(), on_canvas)) continue;
    for (std::size_t i = 0; i < boxes.size(); ++i) sample.panel.concepts[i].box = box_from_corners(boxes[i]);
    bool spaced = true;
    for (std::size_t i = 0; i < boxes.size() && spaced; ++i) {
      for (std::size_t j = i + 1; j < boxes.size() && spaced; ++j) {
        spaced = box_iou(sample.panel.concepts[i].box, sample.panel.concepts[j].box) <= options.iou_cap;
      }
    }
    if (spaced && satisfies_relation(sample) && validate_panel(sample.panel).empty()) return sample;
  }
  throw Error(ErrorCode::kInvalidArgument, kModule,
              "no placement for '" + sample.prompt + "' within " + std::to_string(options.max_attempts) + " attempts",
              "seed " + std::to_string(seed));
}

double separation_score(const SemanticPanel& panel) {
  const auto& cs = panel.concepts;
  if (cs.size() < 2) return 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      best = std::min(best, std::hypot(cs[i].box.xc - cs[j].box.xc, cs[i].box.yc - cs[j].box.yc));
    }
  }
  return best;
}

std::vector<std::size_t> max_separation_select(const std::vector<SemanticPanel>& candidates, std::size_t k) {
  if (k > candidates.size()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "k = " + std::to_string(k) + " exceeds " + std::to_string(candidates.size()) + " candidates", "k");
  }
  std::vector<double> score;
  for (const auto& c : candidates) score.push_back(separation_score(c));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(k);
  return order;
}

}  // namespace spanel
