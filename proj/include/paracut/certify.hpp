#pragma once

// Discrete optimality certificates. For s in the base polytope of f, every
// binary x satisfies f(x) - w'x >= sum_i min(s_i - w_i, 0), so
//
//   gap(x, s) = f(x) - w'x - sum_i min(s_i - w_i, 0)
//
// is nonnegative, and zero certifies x as a global minimizer.

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "paracut/graph.hpp"
#include "paracut/parallel.hpp"

namespace paracut {

/// x_i = 1 iff v_i > 0. Exact zeros go to 0.
inline Labeling threshold(std::span<const double> v) {
  Labeling x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i] > 0.0 ? 1 : 0;
  return x;
}

/// Nested super-level sets {v >= t} for every distinct value t, largest set
/// first, followed by the empty set. k distinct values give k + 1 labelings.
inline std::vector<Labeling> level_sets(std::span<const double> v) {
  std::vector<double> values(v.begin(), v.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<Labeling> out;
  out.reserve(values.size() + 1);
  for (double t : values) {
    Labeling x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i] >= t ? 1 : 0;
    out.push_back(std::move(x));
  }
  out.emplace_back(v.size(), 0);
  return out;
}

struct Certificate {
  std::vector<double> s;
  double gap = 0.0;
  double dual_objective = 0.0;  // sum_i min(s_i - w_i, 0)
  double primal_energy = 0.0;
};

/// sum_i min(s_i - w_i, 0).
inline double dual_bound(std::span<const double> w, std::span<const double> s, int threads = 1) {
  detail::require_length(s.size(), w.size(), "dual_bound");
  return parallel::sum(w.size(), threads, [&](std::size_t i) { return std::min(s[i] - w[i], 0.0); });
}

inline Certificate discrete_gap(const CutGraph& g, std::span<const std::uint8_t> x, std::span<const double> s,
                                int threads = 1) {
  detail::require_length(x.size(), g.size(), "discrete_gap labeling");
  Certificate c;
  c.s.assign(s.begin(), s.end());
  c.primal_energy = energy(g, x);
  c.dual_objective = dual_bound(g.unary(), s, threads);
  c.gap = c.primal_energy - c.dual_objective;
  return c;
}

inline Certificate discrete_gap(const GridEnergy& g, std::span<const std::uint8_t> x, std::span<const double> s,
                                int threads = 1) {
  return discrete_gap(g.graph(), x, s, threads);
}

struct LevelSetChoice {
  Labeling labeling;
  Certificate certificate;
};

/// Sweeps every level set of v from the empty set upward, updating the energy
/// incrementally, and keeps the best. The dual side is shared by all
/// candidates, so this is also the minimum-energy level set.
inline LevelSetChoice best_level_set_gap(const CutGraph& g, std::span<const double> v, std::span<const double> s,
                                         int threads = 1) {
  const std::size_t n = g.size();
  detail::require_length(v.size(), n, "best_level_set_gap");
  Adjacency adj(g);
  auto w = g.unary();

  std::vector<index_t> order(n);
  std::iota(order.begin(), order.end(), index_t{0});
  std::stable_sort(order.begin(), order.end(), [&](index_t a, index_t b) { return v[a] > v[b]; });

  Labeling in(n, 0);
  double current = 0.0;
  double best = 0.0;
  std::size_t best_count = 0;  // prefix length of `order`; 0 is the empty set
  std::size_t k = 0;
  while (k < n) {
    const double level = v[order[k]];
    for (; k < n && v[order[k]] == level; ++k) {
      const index_t i = order[k];
      double delta = -w[i];
      for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
        delta += in[adj.neighbors[e]] ? -adj.weights[e] : adj.weights[e];
      }
      in[i] = 1;
      current += delta;
    }
    if (current < best) {
      best = current;
      best_count = k;
    }
  }

  LevelSetChoice out;
  out.labeling.assign(n, 0);
  for (std::size_t q = 0; q < best_count; ++q) out.labeling[order[q]] = 1;
  out.certificate = discrete_gap(g, out.labeling, s, threads);
  return out;
}

inline LevelSetChoice best_level_set_gap(const GridEnergy& g, std::span<const double> v, std::span<const double> s,
                                         int threads = 1) {
  return best_level_set_gap(g.graph(), v, s, threads);
}

/// 1 - |A and B| / |A or B| over the 1-labeled nodes; 0 when both are empty.
inline double jaccard_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  detail::require_length(b.size(), a.size(), "jaccard_distance");
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += (a[i] && b[i]) ? 1 : 0;
    either += (a[i] || b[i]) ? 1 : 0;
  }
  if (either == 0) return 0.0;
  return 1.0 - static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace paracut
