#pragma once

// Binary energies in cut form:
//
//   E(x) = sum_{(i,j)} a_ij |x_i - x_j| - sum_i w_i x_i   (+ const)
//
// with a_ij >= 0. The pairwise part is the weighted total variation f(x),
// which on binary vectors is the value of the cut {x = 1}.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paracut/core.hpp"

namespace paracut {

struct Edge {
  index_t i = 0;
  index_t j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// General cut energy: n nodes, unary weights w, nonnegative symmetric edge
/// weights. Edges are kept as a flat list sorted by (i, j) with i < j;
/// zero-weight edges are dropped on construction.
class CutGraph {
 public:
  CutGraph() = default;

  CutGraph(std::size_t n, std::vector<double> unary, std::vector<Edge> edges)
      : n_(n), unary_(std::move(unary)), edges_(std::move(edges)) {
    detail::require(n_ >= 1, "graph must have at least one node");
    detail::require_length(unary_.size(), n_, "unary");
    for (double v : unary_) detail::require(std::isfinite(v), "unary weights must be finite");
    for (auto& e : edges_) {
      if (e.i > e.j) std::swap(e.i, e.j);
      detail::require(e.i != e.j, "self-loop edge on node " + std::to_string(e.i));
      detail::require(e.j < n_, "edge endpoint " + std::to_string(e.j) + " out of range");
      detail::require(std::isfinite(e.weight) && e.weight >= 0.0,
                      "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                          ") has negative or non-finite weight");
    }
    std::erase_if(edges_, [](const Edge& e) { return e.weight == 0.0; });
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
      detail::require(edges_[k - 1].i != edges_[k].i || edges_[k - 1].j != edges_[k].j,
                      "duplicate edge (" + std::to_string(edges_[k].i) + ", " +
                          std::to_string(edges_[k].j) + ")");
    }
  }

  std::size_t size() const { return n_; }
  std::span<const double> unary() const { return unary_; }
  std::span<const Edge> edges() const { return edges_; }

  CutGraph with_unary(std::vector<double> unary) const {
    return CutGraph(n_, std::move(unary), edges_);
  }

  CutGraph with_scaled_pairwise(double factor) const {
    detail::require(std::isfinite(factor) && factor >= 0.0, "pairwise scale must be >= 0");
    std::vector<Edge> scaled = edges_;
    for (auto& e : scaled) e.weight *= factor;
    return CutGraph(n_, unary_, std::move(scaled));
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> unary_;
  std::vector<Edge> edges_;
};

/// Weighted total variation f(x) = sum a_ij |x_i - x_j|.
inline double tv_value(const CutGraph& g, std::span<const double> x) {
  detail::require_length(x.size(), g.size(), "tv_value");
  double total = 0.0;
  for (const auto& e : g.edges()) total += e.weight * std::abs(x[e.i] - x[e.j]);
  return total;
}

inline double cut_value(const CutGraph& g, std::span<const std::uint8_t> x) {
  double total = 0.0;
  for (const auto& e : g.edges()) {
    if (x[e.i] != x[e.j]) total += e.weight;
  }
  return total;
}

/// Energy of a binary labeling, without the constant of the reduction:
/// cut(x) - w^T x.
inline double energy(const CutGraph& g, std::span<const std::uint8_t> x) {
  detail::require_length(x.size(), g.size(), "energy");
  double unary = 0.0;
  auto w = g.unary();
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::require(x[i] <= 1, "labeling entries must be 0 or 1");
    if (x[i]) unary += w[i];
  }
  return cut_value(g, x) - unary;
}

/// Compressed adjacency built from the edge list, for sweeps that need
/// neighbor access (level-set scans, max-flow).
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<index_t> neighbors;
  std::vector<double> weights;

  explicit Adjacency(const CutGraph& g) : offsets(g.size() + 1, 0) {
    for (const auto& e : g.edges()) {
      ++offsets[e.i + 1];
      ++offsets[e.j + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    neighbors.resize(offsets.back());
    weights.resize(offsets.back());
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (const auto& e : g.edges()) {
      neighbors[fill[e.i]] = e.j;
      weights[fill[e.i]++] = e.weight;
      neighbors[fill[e.j]] = e.i;
      weights[fill[e.j]++] = e.weight;
    }
  }
};

// ---------------------------------------------------------------------------
// Pairwise potentials

/// psi_ij(x_i, x_j) given as its four table entries.
struct PairwisePotential {
  index_t i = 0;
  index_t j = 0;
  double theta00 = 0.0;
  double theta01 = 0.0;
  double theta10 = 0.0;
  double theta11 = 0.0;

  bool submodular() const { return theta01 + theta10 >= theta00 + theta11; }

  double operator()(std::uint8_t xi, std::uint8_t xj) const {
    if (xi == 0) return xj == 0 ? theta00 : theta01;
    return xj == 0 ? theta10 : theta11;
  }
};

class non_submodular_potential : public invalid_input {
 public:
  non_submodular_potential(index_t i, index_t j)
      : invalid_input("pairwise potential on (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") is not submodular: theta01 + theta10 < theta00 + theta11"),
        i_(i),
        j_(j) {}

  index_t first() const { return i_; }
  index_t second() const { return j_; }

 private:
  index_t i_;
  index_t j_;
};

struct ReducedEnergy {
  CutGraph graph;
  double constant = 0.0;
};

/// Energy -w^T x + sum psi_ij(x_i, x_j) evaluated directly.
inline double pairwise_energy(std::span<const double> unary,
                              std::span<const PairwisePotential> potentials,
                              std::span<const std::uint8_t> x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) total -= unary[i];
  }
  for (const auto& p : potentials) total += p(x[p.i], x[p.j]);
  return total;
}

/// Rewrites -w^T x + sum psi_ij into cut form. For every binary x,
/// pairwise_energy(x) == energy(result.graph, x) + result.constant.
///
/// Each table decomposes as
///   psi = theta00 + (c/2)|xi - xj| + u_i xi + u_j xj,
///   c   = theta01 + theta10 - theta00 - theta11,
///   u_i = (theta10 - theta00 - theta01 + theta11) / 2,
///   u_j = (theta01 - theta00 - theta10 + theta11) / 2,
/// so a_ij = c/2 and the u terms move into w with a sign flip.
inline ReducedEnergy reduce_pairwise(std::size_t n, std::span<const double> unary,
                                     std::span<const PairwisePotential> potentials) {
  detail::require_length(unary.size(), n, "reduce_pairwise unary");
  std::vector<double> w(unary.begin(), unary.end());
  std::vector<Edge> edges;
  edges.reserve(potentials.size());
  double constant = 0.0;
  for (const auto& p : potentials) {
    detail::require(p.i < n && p.j < n, "potential endpoint out of range");
    detail::require(p.i != p.j, "potential on a single node " + std::to_string(p.i));
    if (!p.submodular()) throw non_submodular_potential(p.i, p.j);
    const double c = p.theta01 + p.theta10 - p.theta00 - p.theta11;
    w[p.i] -= 0.5 * (p.theta10 - p.theta00 - p.theta01 + p.theta11);
    w[p.j] -= 0.5 * (p.theta01 - p.theta00 - p.theta10 + p.theta11);
    constant += p.theta00;
    edges.push_back({std::min(p.i, p.j), std::max(p.i, p.j), 0.5 * c});
  }
  // Several potentials may act on the same pair; merge them.
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  std::vector<Edge> merged;
  for (const auto& e : edges) {
    if (!merged.empty() && merged.back().i == e.i && merged.back().j == e.j) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  return {CutGraph(n, std::move(w), std::move(merged)), constant};
}

// ---------------------------------------------------------------------------
// Grids

enum class Connectivity { grid2d_4, grid2d_8, grid3d_6 };

inline std::string to_string(Connectivity c) {
  switch (c) {
    case Connectivity::grid2d_4: return "2D-4";
    case Connectivity::grid2d_8: return "2D-8";
    case Connectivity::grid3d_6: return "3D-6";
  }
  return "?";
}

inline Connectivity parse_connectivity(const std::string& s) {
  if (s == "2D-4" || s == "4") return Connectivity::grid2d_4;
  if (s == "2D-8" || s == "8") return Connectivity::grid2d_8;
  if (s == "3D-6" || s == "6") return Connectivity::grid3d_6;
  throw invalid_input("unsupported connectivity '" + s + "' (expected 2D-4, 2D-8 or 3D-6)");
}

/// Coordinate offset of a neighbor, in padded (axis0, axis1, axis2) form.
using Offset = std::array<int, 3>;

/// Grid topology. 2D grids are stored as 1 x rows x cols so indexing is
/// uniform: index = (i0 * d1 + i1) * d2 + i2, last axis fastest.
class GridShape {
 public:
  GridShape() = default;

  GridShape(std::vector<std::size_t> dims, Connectivity conn) : conn_(conn) {
    const std::size_t expected = conn == Connectivity::grid3d_6 ? 3 : 2;
    detail::require(dims.size() == expected, to_string(conn) + " grid needs " +
                                                 std::to_string(expected) + " dimensions");
    for (auto d : dims) detail::require(d >= 1, "grid dimensions must be positive");
    ndims_ = dims.size();
    if (ndims_ == 2) {
      dims_ = {1, dims[0], dims[1]};
    } else {
      dims_ = {dims[0], dims[1], dims[2]};
    }
    detail::require(size() <= std::size_t{0xFFFFFFFFu}, "grid too large for 32-bit node ids");
    switch (conn_) {
      case Connectivity::grid2d_4: directions_ = {{0, 1, 0}, {0, 0, 1}}; break;
      case Connectivity::grid2d_8: directions_ = {{0, 1, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, -1}}; break;
      case Connectivity::grid3d_6: directions_ = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; break;
    }
  }

  Connectivity connectivity() const { return conn_; }
  std::size_t ndims() const { return ndims_; }
  std::size_t size() const { return dims_[0] * dims_[1] * dims_[2]; }

  /// Dimensions as given at construction (2 or 3 entries).
  std::vector<std::size_t> dims() const {
    if (ndims_ == 2) return {dims_[1], dims_[2]};
    return {dims_[0], dims_[1], dims_[2]};
  }
  const std::array<std::size_t, 3>& padded_dims() const { return dims_; }

  std::size_t index(std::size_t a0, std::size_t a1, std::size_t a2) const {
    return (a0 * dims_[1] + a1) * dims_[2] + a2;
  }
  std::array<std::size_t, 3> coords(std::size_t p) const {
    return {p / (dims_[1] * dims_[2]), (p / dims_[2]) % dims_[1], p % dims_[2]};
  }

  /// Neighbor directions in storage order: one per axis, then the two
  /// diagonals for 8-connected grids.
  const std::vector<Offset>& directions() const { return directions_; }

  /// Neighbor of p along offset, if inside the grid.
  bool step(std::size_t p, const Offset& off, std::size_t& out) const {
    auto c = coords(p);
    std::array<std::size_t, 3> q{};
    for (int a = 0; a < 3; ++a) {
      const long long v = static_cast<long long>(c[a]) + off[a];
      if (v < 0 || v >= static_cast<long long>(dims_[a])) return false;
      q[a] = static_cast<std::size_t>(v);
    }
    out = index(q[0], q[1], q[2]);
    return true;
  }

  /// Direction index for the (unordered) pair, or -1 if not grid-adjacent.
  int direction_of(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    auto ci = coords(i);
    auto cj = coords(j);
    Offset d{};
    for (int a = 0; a < 3; ++a) {
      d[a] = static_cast<int>(static_cast<long long>(cj[a]) - static_cast<long long>(ci[a]));
    }
    for (std::size_t k = 0; k < directions_.size(); ++k) {
      if (directions_[k] == d) return static_cast<int>(k);
    }
    return -1;
  }

  /// Nodes p that have a neighbor along dirs[k], enumerated in index order.
  /// This is the slot layout of per-direction weight arrays.
  std::size_t direction_slots(std::size_t k) const {
    const auto& off = directions_[k];
    std::size_t count = 1;
    for (int a = 0; a < 3; ++a) {
      const std::size_t span = static_cast<std::size_t>(std::abs(off[a]));
      count *= dims_[a] > span ? dims_[a] - span : 0;
    }
    return count;
  }

  friend bool operator==(const GridShape& a, const GridShape& b) {
    return a.conn_ == b.conn_ && a.ndims_ == b.ndims_ && a.dims_ == b.dims_;
  }

  std::string describe() const {
    std::string s;
    auto d = dims();
    for (std::size_t k = 0; k < d.size(); ++k) s += (k ? "x" : "") + std::to_string(d[k]);
    return s + " " + to_string(conn_);
  }

 private:
  Connectivity conn_ = Connectivity::grid2d_4;
  std::size_t ndims_ = 2;
  std::array<std::size_t, 3> dims_{1, 1, 1};
  std::vector<Offset> directions_{{0, 1, 0}, {0, 0, 1}};
};

/// Cut energy whose edges all join grid neighbors.
class GridEnergy {
 public:
  GridEnergy() = default;

  GridEnergy(GridShape shape, std::vector<double> unary, std::vector<Edge> edges)
      : shape_(std::move(shape)), graph_(shape_.size(), std::move(unary), std::move(edges)) {
    for (const auto& e : graph_.edges()) {
      detail::require(shape_.direction_of(e.i, e.j) >= 0,
                      "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                          ") does not join neighbors of a " + shape_.describe() + " grid");
    }
  }

  GridEnergy(GridShape shape, const CutGraph& graph)
      : GridEnergy(std::move(shape), {graph.unary().begin(), graph.unary().end()},
                   {graph.edges().begin(), graph.edges().end()}) {}

  /// Builds a grid from one weight array per direction; array k has
  /// shape.direction_slots(k) entries, ordered by source node index.
  static GridEnergy from_direction_weights(const GridShape& shape, std::vector<double> unary,
                                           const std::vector<std::vector<double>>& weights) {
    const auto& dirs = shape.directions();
    detail::require(weights.size() == dirs.size(), "expected one weight array per direction");
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      detail::require(weights[k].size() == shape.direction_slots(k),
                      "direction " + std::to_string(k) + " weight array has wrong length");
      std::size_t slot = 0;
      for (std::size_t p = 0; p < shape.size(); ++p) {
        std::size_t q = 0;
        if (!shape.step(p, dirs[k], q)) continue;
        const double a = weights[k][slot++];
        if (a != 0.0) edges.push_back({static_cast<index_t>(std::min(p, q)),
                                       static_cast<index_t>(std::max(p, q)), a});
      }
    }
    return GridEnergy(shape, std::move(unary), std::move(edges));
  }

  /// Inverse of from_direction_weights; absent edges read as 0.
  std::vector<std::vector<double>> direction_weights() const {
    const auto& dirs = shape_.directions();
    std::vector<std::vector<double>> out(dirs.size());
    // slot of a source node p in direction k = rank of p among valid sources.
    std::vector<std::vector<std::size_t>> slot_of(dirs.size());
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      out[k].assign(shape_.direction_slots(k), 0.0);
      slot_of[k].assign(shape_.size(), 0);
      std::size_t slot = 0;
      for (std::size_t p = 0; p < shape_.size(); ++p) {
        std::size_t q = 0;
        if (shape_.step(p, dirs[k], q)) slot_of[k][p] = slot++;
      }
    }
    for (const auto& e : graph_.edges()) {
      const int k = shape_.direction_of(e.i, e.j);
      // Source is the node the offset starts from; for (1,-1) that is still
      // the lower index since rows dominate the ordering.
      out[k][slot_of[k][e.i]] = e.weight;
    }
    return out;
  }

  const GridShape& shape() const { return shape_; }
  const CutGraph& graph() const { return graph_; }
  std::size_t size() const { return graph_.size(); }
  std::span<const double> unary() const { return graph_.unary(); }
  std::span<const Edge> edges() const { return graph_.edges(); }

  GridEnergy with_unary(std::vector<double> unary) const {
    return GridEnergy(shape_, graph_.with_unary(std::move(unary)));
  }
  GridEnergy with_scaled_pairwise(double factor) const {
    return GridEnergy(shape_, graph_.with_scaled_pairwise(factor));
  }

 private:
  GridShape shape_;
  CutGraph graph_;
};

inline double tv_value(const GridEnergy& g, std::span<const double> x) { return tv_value(g.graph(), x); }
inline double energy(const GridEnergy& g, std::span<const std::uint8_t> x) { return energy(g.graph(), x); }

}  // namespace paracut
