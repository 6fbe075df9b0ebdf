#include "spanel/keypoints.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "spanel/error.hpp"

namespace spanel {

FpsTrace fps_sample_trace(const RegionMask& mask, const FpsOptions& options) {
  const int rows = mask.pixels.rows;
  const int cols = mask.pixels.cols;
  std::vector<std::size_t> index;
  std::vector<Point2> candidates;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (mask.pixels.at(y, x) == 0) continue;
      index.push_back(static_cast<std::size_t>(y) * cols + x);
      candidates.push_back({(x + 0.5) / cols, (y + 0.5) / rows});
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "keypoint-sampler", "mask has no set pixels");

  FpsTrace trace;
  if (options.max_points == 0) return trace;

  std::mt19937_64 rng(options.seed);
  std::size_t pick = static_cast<std::size_t>(rng() % candidates.size());

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> nearest(candidates.size(), inf);  // squared distance to the sampled set
  double step_distance = inf;
  for (;;) {
    trace.points.points.push_back(candidates[pick]);
    trace.pixel_index.push_back(index[pick]);
    trace.selection_distance.push_back(step_distance);
    if (trace.points.points.size() >= options.max_points) break;

    const Point2 s = candidates[pick];
    std::size_t best = 0;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double dx = candidates[i].x - s.x;
      const double dy = candidates[i].y - s.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < nearest[i]) nearest[i] = d2;
      if (nearest[i] > best_d2) {
        best_d2 = nearest[i];
        best = i;
      }
    }
    step_distance = std::sqrt(best_d2);
    if (step_distance < options.stop_threshold) break;
    pick = best;
  }

  if (mask.box) {
    for (auto& p : trace.points.points) p = clamp_into(p, *mask.box);
  }
  return trace;
}

KeypointSet fps_sample(const RegionMask& mask, const FpsOptions& options) {
  return fps_sample_trace(mask, options).points;
}

}  // namespace spanel
