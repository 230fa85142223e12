#pragma once

// Brute-force maximum-cardinality matching between two small point sets
// under a radius constraint (bitmask DP over the gt side).

#include <cmath>
#include <cstdint>
#include <vector>

#include "geometry.hpp"

namespace mbfuse::oracle {

inline std::size_t optimal_match_count(const std::vector<Point>& preds,
                                       const std::vector<Point>& gt, double tol) {
  const std::size_t g = gt.size();
  std::vector<int> best(std::size_t{1} << g, -1);
  best[0] = 0;
  for (const auto& p : preds) {
    std::vector<int> next = best;
    for (std::size_t mask = 0; mask < best.size(); ++mask) {
      if (best[mask] < 0) continue;
      for (std::size_t j = 0; j < g; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        if (std::hypot(p.x - gt[j].x, p.y - gt[j].y) > tol) continue;
        const std::size_t m2 = mask | (std::size_t{1} << j);
        if (best[mask] + 1 > next[m2]) next[m2] = best[mask] + 1;
      }
    }
    best = std::move(next);
  }
  int out = 0;
  for (int v : best) out = std::max(out, v);
  return static_cast<std::size_t>(out);
}

}  // namespace mbfuse::oracle
