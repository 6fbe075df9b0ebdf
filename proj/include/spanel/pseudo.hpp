#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spanel/core.hpp"
#include "spanel/palette.hpp"

namespace spanel {

enum class Relation { kLeftOf, kRightOf, kAbove, kBelow, kNextTo, kBetween, kSurroundedBy };

inline constexpr Relation kAllRelations[] = {Relation::kLeftOf, Relation::kRightOf, Relation::kAbove,
                                             Relation::kBelow,  Relation::kNextTo,  Relation::kBetween,
                                             Relation::kSurroundedBy};

// "left of", "right of", "above", "below", "next to", "between", "surrounded by".
const char* to_string(Relation relation);
Relation relation_from_string(std::string_view text);

struct PoolObject {
  std::string singular;
  std::string plural;
};

struct ColorWord {
  std::string word;
  Rgb rgb;
};

struct ObjectPool {
  std::vector<PoolObject> objects;
  std::vector<ColorWord> colors;

  // assets/object_pool.txt and assets/color_words.txt.
  static const ObjectPool& shipped();
  static ObjectPool from_text(std::string_view objects, std::string_view colors);
};

// Geometric predicates on single boxes (corner form, y grows downward).
//   left of:  a.x2 <= b.x1          right of: a.x1 >= b.x2
//   above:    a.y2 <= b.y1          below:    a.y1 >= b.y2
//   next to:  vertical overlap and a horizontal gap in [0, 0.15]
bool left_of(const BoundingBox& a, const BoundingBox& b);
bool right_of(const BoundingBox& a, const BoundingBox& b);
bool above(const BoundingBox& a, const BoundingBox& b);
bool below(const BoundingBox& a, const BoundingBox& b);
bool next_to(const BoundingBox& a, const BoundingBox& b);
bool overlaps_vertically(const BoundingBox& a, const BoundingBox& b);
bool overlaps_horizontally(const BoundingBox& a, const BoundingBox& b);

inline constexpr double kNextToGap = 0.15;

struct PseudoSample {
  std::string prompt;
  SemanticPanel panel;
  Relation relation = Relation::kLeftOf;
  // Per concept: 0 = subject group, 1 = reference group, 2 = second
  // reference ("between" only).
  std::vector<int> roles;

  friend bool operator==(const PseudoSample&, const PseudoSample&) = default;
};

// Every (subject, reference) pair satisfies the relation:
//   left of / right of / above / below / next to: pairwise predicate.
//   between: subject right of every role-1 box and left of every role-2
//            box, overlapping each vertically.
//   surrounded by: the four role-1 boxes are left of, right of, above and
//            below the subject, each overlapping it on the other axis.
bool satisfies_relation(const PseudoSample& sample);

struct PseudoOptions {
  double iou_cap = 0.05;  // any two boxes
  int max_attempts = 2000;
};

// Deterministic for a given seed. Counts are 1 to 3 per group for the four
// directional relations and one per group otherwise (four surrounders).
// Each group gets a color word with probability 1/2. Throws
// Error(kInvalidArgument) when no placement is found within max_attempts.
PseudoSample gen_pseudo_sample(std::uint64_t seed, Relation relation, const ObjectPool& pool = ObjectPool::shipped(),
                               const PseudoOptions& options = {});

// Minimum pairwise center distance; 1.0 with fewer than two concepts.
double separation_score(const SemanticPanel& panel);

// Indices of the k best candidates by separation score, ties by index.
std::vector<std::size_t> max_separation_select(const std::vector<SemanticPanel>& candidates, std::size_t k);

}  // namespace spanel
