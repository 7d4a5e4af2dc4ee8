#pragma once

// Weighted 1D total-variation proximal operator on a chain,
//
//   argmin_x  1/2 sum (x_i - s_i)^2 + sum_i a_i |x_{i+1} - x_i|,
//
// solved exactly with the taut-string construction: with cumulative sums
// S_k = s_0 + ... + s_{k-1}, the cumulative solution X_k is the shortest
// path from (0, 0) to (m, S_m) through the tube |X_k - S_k| <= a_{k-1},
// and x_i is the slope of that path on [i, i+1]. The path is traced with a
// funnel: a convex chain hugging the upper tube boundary and a concave chain
// hugging the lower one, both rooted at the last committed bend point.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "paracut/core.hpp"

namespace paracut {

/// One connected piece of a decomposition class: ordered node ids and the
/// m - 1 weights of the edges between consecutive nodes.
struct ChainView {
  std::span<const index_t> nodes;
  std::span<const double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Scratch buffers for tv1d_prox; reused across calls to keep the inner
/// loop free of allocations.
class TautStringWorkspace {
 public:
  void reserve(std::size_t m) {
    if (cumsum_.size() < m + 1) {
      cumsum_.resize(m + 1);
      upper_.resize(m + 2);
      lower_.resize(m + 2);
    }
  }

 private:
  struct Point {
    std::size_t k;
    double v;
  };

  std::vector<double> cumsum_;
  std::vector<Point> upper_;
  std::vector<Point> lower_;

  friend void tv1d_prox(std::span<const double>, std::span<const double>, std::span<double>,
                        TautStringWorkspace&);
};

namespace detail {

inline void check_tv1d_args(std::size_t m, std::span<const double> weights) {
  if (m == 0) throw invalid_input("tv1d_prox: empty signal");
  if (weights.size() != m - 1) {
    throw invalid_input("tv1d_prox: expected " + std::to_string(m - 1) + " weights, got " +
                        std::to_string(weights.size()));
  }
  for (double a : weights) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw invalid_input("tv1d_prox: negative or non-finite weight");
  }
}

}  // namespace detail

/// Writes the prox of the weighted chain TV at `signal` into `out`.
/// `out` may alias `signal`.
inline void tv1d_prox(std::span<const double> signal, std::span<const double> weights,
                      std::span<double> out, TautStringWorkspace& ws) {
  const std::size_t m = signal.size();
  detail::check_tv1d_args(m, weights);
  if (out.size() != m) throw invalid_input("tv1d_prox: output length mismatch");
  ws.reserve(m);

  using Point = TautStringWorkspace::Point;
  double* S = ws.cumsum_.data();
  S[0] = 0.0;
  for (std::size_t i = 0; i < m; ++i) S[i + 1] = S[i] + signal[i];

  // Both chains share their first element, the apex.
  Point* up = ws.upper_.data();
  Point* lo = ws.lower_.data();
  std::size_t up_head = 0, up_end = 1;
  std::size_t lo_head = 0, lo_end = 1;
  up[0] = lo[0] = Point{0, 0.0};

  auto slope = [](const Point& a, const Point& b) {
    return (b.v - a.v) / static_cast<double>(b.k - a.k);
  };
  auto emit = [&](const Point& a, const Point& b) {
    const double s = slope(a, b);
    for (std::size_t i = a.k; i < b.k; ++i) out[i] = s;
  };

  for (std::size_t k = 1; k <= m; ++k) {
    const double radius = k < m ? weights[k - 1] : 0.0;
    const Point hi{k, S[k] + radius};
    const Point low{k, S[k] - radius};

    // Upper boundary point: keep the upper chain convex.
    while (up_end - up_head >= 2 && slope(up[up_end - 2], up[up_end - 1]) >= slope(up[up_end - 1], hi)) {
      --up_end;
    }
    if (up_end - up_head == 1) {
      // The straight line apex -> hi may dip below the lower chain; every
      // lower point it passes under becomes a committed bend.
      while (lo_end - lo_head >= 2 && slope(lo[lo_head], lo[lo_head + 1]) > slope(lo[lo_head], hi)) {
        emit(lo[lo_head], lo[lo_head + 1]);
        ++lo_head;
      }
      up_head = 0;
      up[0] = lo[lo_head];
      up_end = 1;
    }
    up[up_end++] = hi;

    // Lower boundary point: keep the lower chain concave.
    while (lo_end - lo_head >= 2 && slope(lo[lo_end - 2], lo[lo_end - 1]) <= slope(lo[lo_end - 1], low)) {
      --lo_end;
    }
    if (lo_end - lo_head == 1) {
      while (up_end - up_head >= 2 && slope(up[up_head], up[up_head + 1]) < slope(up[up_head], low)) {
        emit(up[up_head], up[up_head + 1]);
        ++up_head;
      }
      lo_head = 0;
      lo[0] = up[up_head];
      lo_end = 1;
    }
    lo[lo_end++] = low;
  }

  // Both chains now end at (m, S_m) and coincide as a path.
  for (std::size_t p = lo_head; p + 1 < lo_end; ++p) emit(lo[p], lo[p + 1]);
}

inline std::vector<double> tv1d_prox(std::span<const double> signal, std::span<const double> weights) {
  TautStringWorkspace ws;
  std::vector<double> out(signal.size());
  tv1d_prox(signal, weights, out, ws);
  return out;
}

/// Default absolute tolerance of chain_dual_feasible.
inline constexpr double kDualFeasibilityTol = 1e-9;

/// Membership of y in the chain's base polytope: partial sums bounded by
/// the edge weights and total sum zero.
inline bool chain_dual_feasible(std::span<const double> y, std::span<const double> weights,
                                double tol = kDualFeasibilityTol) {
  if (y.empty()) return weights.empty();
  if (weights.size() + 1 != y.size()) return false;
  double partial = 0.0;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    partial += y[k];
    if (std::abs(partial) > weights[k] + tol) return false;
  }
  partial += y.back();
  return std::abs(partial) <= tol;
}

}  // namespace paracut
