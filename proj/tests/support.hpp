#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "spanel/core.hpp"
#include "spanel/error.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline spanel::BoundingBox random_box(std::mt19937_64& rng) {
  const double w = uniform(rng, 0.05, 0.6);
  const double h = uniform(rng, 0.05, 0.6);
  return {uniform(rng, w / 2, 1 - w / 2), uniform(rng, h / 2, 1 - h / 2), w, h};
}

inline spanel::VisualConcept random_concept(std::mt19937_64& rng, const std::string& id) {
  static const char* words[] = {"red", "apple", "cat", "blue", "ball", "tree", "small", "dog", "wooden", "chair"};
  spanel::VisualConcept c;
  c.id = id;
  const int n = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < n; ++k) c.description += std::string(k ? " " : "") + words[rng() % 10];
  c.box = random_box(rng);
  const int colors = static_cast<int>(rng() % 4);
  double left = 1.0;
  for (int k = 0; k < colors; ++k) {
    const int index = static_cast<int>(rng() % spanel::kPaletteSize);
    bool dup = false;
    for (const auto& e : c.colors.entries) dup = dup || e.index == index;
    if (dup) continue;
    const double p = uniform(rng, 0.06, left / 2);
    left -= p;
    c.colors.entries.push_back({index, (rng() & 1) ? std::optional<double>(p) : std::nullopt});
  }
  const spanel::Corners k = spanel::box_corners(c.box);
  const int points = static_cast<int>(rng() % 5);
  for (int p = 0; p < points; ++p) c.keypoints.points.push_back({uniform(rng, k.x1, k.x2), uniform(rng, k.y1, k.y2)});
  return c;
}

inline spanel::SemanticPanel random_panel(std::mt19937_64& rng, int min_concepts = 1, int max_concepts = 4) {
  spanel::SemanticPanel p;
  p.prompt = "a test scene";
  p.version = static_cast<std::int64_t>(rng() % 5);
  const int n = min_concepts + static_cast<int>(rng() % (max_concepts - min_concepts + 1));
  for (int k = 0; k < n; ++k) p.concepts.push_back(random_concept(rng, "c0_" + std::to_string(k + 1)));
  return p;
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("spanel_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

template <class F>
spanel::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const spanel::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a spanel::Error");
}

}  // namespace testing
