#pragma once

// Exact reference solvers. Both are deliberately simple and independent of the
// convex machinery: exhaustive enumeration for tiny graphs and Dinic max-flow
// for everything else.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "paracut/graph.hpp"

namespace paracut {

struct MinCut {
  Labeling labeling;
  double energy = 0.0;
  double flow = 0.0;  // max-flow value; energy + sum_i max(w_i, 0)
};

inline constexpr std::size_t kBruteForceLimit = 24;

/// Exhaustive minimum over all 2^n labelings. Ties resolve to the
/// lexicographically smallest labeling (x_0 most significant).
inline MinCut brute_force_mincut(const CutGraph& g) {
  const std::size_t n = g.size();
  if (n > kBruteForceLimit) {
    throw invalid_input("brute_force_mincut: n = " + std::to_string(n) + " exceeds " +
                        std::to_string(kBruteForceLimit));
  }
  Labeling x(n, 0);
  MinCut best;
  best.energy = std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> (n - 1 - i)) & 1u;
    const double e = energy(g, x);
    if (e < best.energy) {
      best.energy = e;
      best.labeling = x;
    }
  }
  for (double w : g.unary()) best.flow += std::max(w, 0.0);
  best.flow += best.energy;
  return best;
}

inline MinCut brute_force_mincut(const GridEnergy& g) { return brute_force_mincut(g.graph()); }

namespace detail {

class Dinic {
 public:
  explicit Dinic(std::size_t nodes) : head_(nodes, -1), level_(nodes), next_arc_(nodes) {}

  void add_arc(std::size_t u, std::size_t v, double cap, double reverse_cap) {
    arcs_.push_back({v, cap, head_[u]});
    head_[u] = static_cast<long>(arcs_.size() - 1);
    arcs_.push_back({u, reverse_cap, head_[v]});
    head_[v] = static_cast<long>(arcs_.size() - 1);
  }

  double run(std::size_t s, std::size_t t, double eps) {
    eps_ = eps;
    double flow = 0.0;
    while (bfs(s, t)) {
      for (std::size_t v = 0; v < head_.size(); ++v) next_arc_[v] = head_[v];
      while (true) {
        const double pushed = augment(s, t);
        if (pushed <= 0.0) break;
        flow += pushed;
      }
    }
    return flow;
  }

  /// Nodes reachable from s in the final residual graph.
  std::vector<std::uint8_t> source_side(std::size_t s) const {
    std::vector<std::uint8_t> seen(head_.size(), 0);
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (long a = head_[u]; a >= 0; a = arcs_[a].next) {
        if (arcs_[a].cap > eps_ && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = 1;
          stack.push_back(arcs_[a].to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::size_t to;
    double cap;
    long next;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (long a = head_[u]; a >= 0; a = arcs_[a].next) {
        if (arcs_[a].cap > eps_ && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[u] + 1;
          q.push(arcs_[a].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  // One augmenting path along the level graph, found iteratively so long
  // paths on big grids cannot overflow the stack.
  double augment(std::size_t s, std::size_t t) {
    std::vector<long> path;
    std::size_t u = s;
    while (true) {
      if (u == t) {
        double push = std::numeric_limits<double>::infinity();
        for (long a : path) push = std::min(push, arcs_[a].cap);
        for (long a : path) {
          arcs_[a].cap -= push;
          arcs_[a ^ 1].cap += push;
        }
        return push;
      }
      long& a = next_arc_[u];
      while (a >= 0 && !(arcs_[a].cap > eps_ && level_[arcs_[a].to] == level_[u] + 1)) a = arcs_[a].next;
      if (a >= 0) {
        path.push_back(a);
        u = arcs_[a].to;
        continue;
      }
      // Dead end: prune u from the level graph and back up.
      level_[u] = -1;
      if (path.empty()) return 0.0;
      const long back = path.back();
      path.pop_back();
      u = arcs_[back ^ 1].to;
      next_arc_[u] = arcs_[next_arc_[u]].next;
    }
  }

  std::vector<Arc> arcs_;
  std::vector<long> head_;
  std::vector<int> level_;
  std::vector<long> next_arc_;
  double eps_ = 0.0;
};

}  // namespace detail

/// Min cut of the s-t network with source arcs w_i > 0, sink arcs -w_i and a
/// symmetric arc pair per edge. The source side is labeled 1, so the reported
/// energy equals energy(g, labeling); the flow exceeds it by sum_i max(w_i, 0).
inline MinCut maxflow_mincut(const CutGraph& g) {
  const std::size_t n = g.size();
  const std::size_t s = n;
  const std::size_t t = n + 1;
  detail::Dinic net(n + 2);
  double scale = 0.0;
  double positive = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = g.unary()[i];
    scale = std::max(scale, std::abs(w));
    if (w > 0.0) {
      net.add_arc(s, i, w, 0.0);
      positive += w;
    } else if (w < 0.0) {
      net.add_arc(i, t, -w, 0.0);
    }
  }
  for (const auto& e : g.edges()) {
    scale = std::max(scale, e.weight);
    net.add_arc(e.i, e.j, e.weight, e.weight);
  }
  const double eps = 1e-12 * std::max(scale, 1.0);

  MinCut out;
  out.flow = net.run(s, t, eps);
  auto side = net.source_side(s);
  out.labeling.assign(side.begin(), side.begin() + static_cast<long>(n));
  out.energy = energy(g, out.labeling);

  const double capacity = out.energy + positive;
  const double slack = 1e-9 * std::max({1.0, std::abs(capacity), positive});
  if (std::abs(capacity - out.flow) > slack) {
    throw std::logic_error("maxflow_mincut: flow " + std::to_string(out.flow) + " differs from cut capacity " +
                           std::to_string(capacity));
  }
  return out;
}

inline MinCut maxflow_mincut(const GridEnergy& g) { return maxflow_mincut(g.graph()); }

}  // namespace paracut
