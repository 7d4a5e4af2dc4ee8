#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "paracut/graph.hpp"

namespace paracut {

/// Ranges for random instances: edge weights uniform in [weight_lo, weight_hi],
/// unaries uniform in [unary_lo, unary_hi].
struct RandomRanges {
  double weight_lo = 0.0;
  double weight_hi = 2.0;
  double unary_lo = -2.0;
  double unary_hi = 2.0;
};

inline GridEnergy random_grid(const GridShape& shape, std::uint64_t seed, RandomRanges ranges = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unary_dist(ranges.unary_lo, ranges.unary_hi);
  std::uniform_real_distribution<double> weight_dist(ranges.weight_lo, ranges.weight_hi);
  std::vector<double> unary(shape.size());
  for (auto& v : unary) v = unary_dist(rng);
  std::vector<std::vector<double>> weights(shape.directions().size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k].resize(shape.direction_slots(k));
    for (auto& a : weights[k]) a = weight_dist(rng);
  }
  return GridEnergy::from_direction_weights(shape, std::move(unary), weights);
}

/// Multiplies each unary by (1 + noise * u), u uniform in [-1, 1].
inline GridEnergy perturb_unary(const GridEnergy& g, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> unary(g.unary().begin(), g.unary().end());
  for (auto& v : unary) v *= 1.0 + noise * dist(rng);
  return g.with_unary(std::move(unary));
}

}  // namespace paracut
