#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spanel/core.hpp"
#include "spanel/grid.hpp"

namespace spanel {

struct RegionMask {
  BinaryGrid pixels;                 // nonzero = object pixel
  std::optional<BoundingBox> box;    // owning concept box, when known
};

struct FpsOptions {
  std::size_t max_points = 8;
  double stop_threshold = 0.1;
  std::uint64_t seed = 0;
};

struct FpsTrace {
  KeypointSet points;                    // selection order
  std::vector<std::size_t> pixel_index;  // row-major index of each selected pixel
  // Max-min distance at each selection step; the first (random) pick has none
  // and records +infinity.
  std::vector<double> selection_distance;
};

// Farthest point sampling over the normalized pixel centers of the mask
// ((x + 0.5) / W, (y + 0.5) / H). The first point is drawn from the seeded
// generator; each further step takes the candidate farthest from the sampled
// set (ties: lowest row-major index) and stops once max_points are taken or
// the farthest distance drops below stop_threshold. When the mask carries a
// box, the returned points are clamped into it.
FpsTrace fps_sample_trace(const RegionMask& mask, const FpsOptions& options = {});
KeypointSet fps_sample(const RegionMask& mask, const FpsOptions& options = {});

}  // namespace spanel
