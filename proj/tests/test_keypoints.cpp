#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spanel/error.hpp"
#include "spanel/keypoints.hpp"
#include "support.hpp"

using namespace spanel;

namespace {

BinaryGrid random_mask(std::mt19937_64& rng, int rows, int cols, double density) {
  BinaryGrid m(rows, cols, 0);
  for (auto& v : m.data) v = testing::uniform(rng, 0, 1) < density;
  if (std::none_of(m.data.begin(), m.data.end(), [](auto v) { return v != 0; })) m.data[rng() % m.data.size()] = 1;
  return m;
}

}  // namespace

TEST_SUITE("keypoints") {

TEST_CASE("matches the exhaustive oracle") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 60; ++t) {
    const int rows = 1 + static_cast<int>(rng() % 32);
    const int cols = 1 + static_cast<int>(rng() % 32);
    const BinaryGrid m = random_mask(rng, rows, cols, testing::uniform(rng, 0.02, 0.9));
    FpsOptions o;
    o.seed = rng();
    const FpsTrace trace = fps_sample_trace({m, std::nullopt}, o);
    CHECK(trace.pixel_index == oracle::fps(m, o.max_points, o.stop_threshold, o.seed));
    for (std::size_t k = 0; k < trace.pixel_index.size(); ++k) {
      const std::size_t px = trace.pixel_index[k];
      CHECK(trace.points.points[k].x == (static_cast<double>(px % cols) + 0.5) / cols);
      CHECK(trace.points.points[k].y == (static_cast<double>(px / cols) + 0.5) / rows);
    }
  }
}

TEST_CASE("a single pixel gives one point") {
  BinaryGrid m(4, 4, 0);
  m.at(2, 1) = 1;
  const KeypointSet k = fps_sample({m, std::nullopt});
  REQUIRE(k.points.size() == 1);
  CHECK(k.points[0].x == 0.375);
  CHECK(k.points[0].y == 0.625);
}

TEST_CASE("stops below the distance threshold") {
  // Two pixels 0.5 apart: both taken. Two pixels 0.05 apart: one.
  BinaryGrid far(1, 2, 1);
  CHECK(fps_sample({far, std::nullopt}).points.size() == 2);
  BinaryGrid near(1, 20, 0);
  near.at(0, 0) = near.at(0, 1) = 1;
  CHECK(fps_sample({near, std::nullopt}).points.size() == 1);
}

TEST_CASE("stops at eight points") {
  BinaryGrid full(32, 32, 1);
  const FpsTrace t = fps_sample_trace({full, std::nullopt});
  CHECK(t.points.points.size() == 8);
  for (std::size_t k = 1; k < t.selection_distance.size(); ++k) CHECK(t.selection_distance[k] >= 0.1);
  FpsOptions o;
  o.max_points = 3;
  CHECK(fps_sample({full, std::nullopt}, o).points.size() == 3);
}

TEST_CASE("points are clamped into the owning box") {
  BinaryGrid full(4, 4, 1);
  const BoundingBox box{0.5, 0.5, 0.5, 0.5};
  for (const auto& p : fps_sample({full, box}).points) {
    CHECK(p.x >= 0.25);
    CHECK(p.x <= 0.75);
    CHECK(p.y >= 0.25);
    CHECK(p.y <= 0.75);
  }
}

TEST_CASE("deterministic per seed") {
  std::mt19937_64 rng(1);
  const BinaryGrid m = random_mask(rng, 20, 20, 0.5);
  FpsOptions o;
  o.seed = 42;
  CHECK(fps_sample({m, std::nullopt}, o) == fps_sample({m, std::nullopt}, o));
}

TEST_CASE("empty mask is an error") {
  CHECK(testing::error_code_of([] { fps_sample({BinaryGrid(3, 3, 0), std::nullopt}); }) ==
        ErrorCode::kInvalidArgument);
}

}
