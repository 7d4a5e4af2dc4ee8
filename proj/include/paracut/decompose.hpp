#pragma once

// Splitting a grid energy f = f_1 + ... + f_r into classes of vertex-disjoint
// weighted chains:
//
//   2D-4 -> rows, columns
//   2D-8 -> rows, columns, zig-zags on even row pairs, zig-zags on odd row pairs
//   3D-6 -> lines along axis 2, axis 1, axis 0
//
// Chains follow memory order where the topology allows it. Zero-weight edges
// are absent from the graph, so lines break into maximal runs of present
// edges; classes left without edges are dropped.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "paracut/graph.hpp"
#include "paracut/tv1d.hpp"

namespace paracut {

/// Chains of one class stored back to back.
class ChainClass {
 public:
  void add_chain(std::span<const index_t> nodes, std::span<const double> weights) {
    detail::require(!nodes.empty(), "chain must contain at least one node");
    detail::require(weights.size() + 1 == nodes.size(), "chain needs one weight per consecutive pair");
    nodes_.insert(nodes_.end(), nodes.begin(), nodes.end());
    weights_.insert(weights_.end(), weights.begin(), weights.end());
    offsets_.push_back(nodes_.size());
    max_length_ = std::max(max_length_, nodes.size());
  }

  std::size_t chain_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return weights_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t max_chain_length() const { return max_length_; }

  ChainView chain(std::size_t c) const {
    const std::size_t lo = offsets_[c];
    const std::size_t hi = offsets_[c + 1];
    // Chain c owns hi - lo nodes and hi - lo - 1 weights; weights are packed
    // so chain c's weights start at lo - c.
    return {std::span<const index_t>(nodes_).subspan(lo, hi - lo),
            std::span<const double>(weights_).subspan(lo - c, hi - lo - 1)};
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<index_t> nodes_;
  std::vector<double> weights_;
  std::size_t max_length_ = 0;
};

class ChainDecomposition {
 public:
  struct ChainRef {
    std::uint32_t cls;
    std::size_t chain;
  };

  ChainDecomposition() = default;

  /// Collects classes; support masks and degrees are derived here but the
  /// partition itself is not checked (see validate()).
  ChainDecomposition(std::size_t n, std::vector<ChainClass> classes)
      : n_(n), classes_(std::move(classes)), degree_(n, 0) {
    detail::require(classes_.size() < 256, "too many decomposition classes");
    support_.assign(classes_.size() * n_, 0);
    for (std::size_t j = 0; j < classes_.size(); ++j) {
      const auto& cls = classes_[j];
      for (std::size_t c = 0; c < cls.chain_count(); ++c) {
        for (index_t v : cls.chain(c).nodes) {
          detail::require(v < n_, "chain node " + std::to_string(v) + " out of range");
          support_[j * n_ + v] = 1;
        }
        refs_.push_back({static_cast<std::uint32_t>(j), c});
      }
      max_length_ = std::max(max_length_, cls.max_chain_length());
    }
    for (std::size_t j = 0; j < classes_.size(); ++j) {
      for (std::size_t i = 0; i < n_; ++i) degree_[i] += support_[j * n_ + i];
    }
  }

  std::size_t node_count() const { return n_; }
  std::size_t class_count() const { return classes_.size(); }
  const ChainClass& class_at(std::size_t j) const { return classes_[j]; }
  std::span<const ChainClass> classes() const { return classes_; }

  /// Per-node mask of class j: 1 where some chain of the class passes.
  std::span<const std::uint8_t> support(std::size_t j) const {
    return std::span<const std::uint8_t>(support_).subspan(j * n_, n_);
  }
  /// Number of classes whose support contains each node.
  std::span<const std::uint8_t> degrees() const { return degree_; }

  /// Every chain of every class, class-major.
  std::span<const ChainRef> chains() const { return refs_; }
  ChainView chain(const ChainRef& ref) const { return classes_[ref.cls].chain(ref.chain); }
  std::size_t max_chain_length() const { return max_length_; }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& c : classes_) total += c.edge_count();
    return total;
  }

 private:
  std::size_t n_ = 0;
  std::vector<ChainClass> classes_;
  std::vector<std::uint8_t> support_;
  std::vector<std::uint8_t> degree_;
  std::vector<ChainRef> refs_;
  std::size_t max_length_ = 0;
};

/// f_j(x) for class j.
inline double class_tv_value(const ChainClass& cls, std::span<const double> x) {
  double total = 0.0;
  for (std::size_t c = 0; c < cls.chain_count(); ++c) {
    auto ch = cls.chain(c);
    for (std::size_t k = 0; k + 1 < ch.size(); ++k) {
      total += ch.weights[k] * std::abs(x[ch.nodes[k + 1]] - x[ch.nodes[k]]);
    }
  }
  return total;
}

namespace detail {

// Dense per-direction weights: dense[k][p] = weight of the edge leaving p
// along direction k (0 when absent).
inline std::vector<std::vector<double>> dense_direction_weights(const GridEnergy& g) {
  const auto& shape = g.shape();
  std::vector<std::vector<double>> dense(shape.directions().size(),
                                         std::vector<double>(shape.size(), 0.0));
  for (const auto& e : g.edges()) dense[shape.direction_of(e.i, e.j)][e.i] = e.weight;
  return dense;
}

// Appends maximal runs of present edges along `path` as chains.
template <class WeightFn>
void append_runs(ChainClass& cls, const std::vector<index_t>& path, WeightFn&& weight_between,
                 std::vector<index_t>& run, std::vector<double>& run_weights) {
  run.clear();
  run_weights.clear();
  auto flush = [&] {
    if (run.size() >= 2) cls.add_chain(run, run_weights);
    run.clear();
    run_weights.clear();
  };
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (k > 0) {
      const double a = weight_between(path[k - 1], path[k]);
      if (a > 0.0) {
        run_weights.push_back(a);
      } else {
        flush();
      }
    }
    run.push_back(path[k]);
  }
  flush();
}

}  // namespace detail

inline ChainDecomposition decompose_grid(const GridEnergy& g) {
  const auto& shape = g.shape();
  const auto dense = detail::dense_direction_weights(g);
  auto weight_between = [&](index_t u, index_t v) {
    const int k = shape.direction_of(u, v);
    return k < 0 ? 0.0 : dense[k][std::min(u, v)];
  };

  std::vector<index_t> path, run;
  std::vector<double> run_weights;

  // Straight lines along one axis, ordered by their first node.
  auto lines = [&](const Offset& off) {
    ChainClass cls;
    const Offset back{-off[0], -off[1], -off[2]};
    for (std::size_t p = 0; p < shape.size(); ++p) {
      std::size_t q = 0;
      if (shape.step(p, back, q)) continue;
      path.clear();
      std::size_t cur = p;
      path.push_back(static_cast<index_t>(cur));
      while (shape.step(cur, off, q)) {
        path.push_back(static_cast<index_t>(q));
        cur = q;
      }
      detail::append_runs(cls, path, weight_between, run, run_weights);
    }
    return cls;
  };

  // Two interleaved zig-zags between rows r and r + 1; together they use
  // every diagonal edge of the row pair and share no node.
  auto zigzags = [&](std::size_t first_row) {
    ChainClass cls;
    const auto& d = shape.padded_dims();
    for (std::size_t r = first_row; r + 1 < d[1]; r += 2) {
      for (std::size_t phase = 0; phase < 2; ++phase) {
        path.clear();
        for (std::size_t c = 0; c < d[2]; ++c) {
          const std::size_t row = r + ((c + phase) % 2);
          path.push_back(static_cast<index_t>(shape.index(0, row, c)));
        }
        detail::append_runs(cls, path, weight_between, run, run_weights);
      }
    }
    return cls;
  };

  std::vector<ChainClass> classes;
  switch (shape.connectivity()) {
    case Connectivity::grid2d_4:
      classes.push_back(lines({0, 0, 1}));
      classes.push_back(lines({0, 1, 0}));
      break;
    case Connectivity::grid2d_8:
      classes.push_back(lines({0, 0, 1}));
      classes.push_back(lines({0, 1, 0}));
      classes.push_back(zigzags(0));
      classes.push_back(zigzags(1));
      break;
    case Connectivity::grid3d_6:
      classes.push_back(lines({0, 0, 1}));
      classes.push_back(lines({0, 1, 0}));
      classes.push_back(lines({1, 0, 0}));
      break;
  }
  std::erase_if(classes, [](const ChainClass& c) { return c.edge_count() == 0; });
  return ChainDecomposition(shape.size(), std::move(classes));
}

struct ValidationReport {
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
  explicit operator bool() const { return ok(); }
};

/// Checks that the chains partition the edges of `g` with matching weights,
/// that each class is vertex-disjoint, and that sum_j f_j(x) = f(x) on
/// random real vectors.
inline ValidationReport validate(const ChainDecomposition& dec, const CutGraph& g,
                                 std::uint64_t seed = 0x5eed) {
  ValidationReport report;
  auto problem = [&](std::string msg) {
    if (report.problems.size() < 50) report.problems.push_back(std::move(msg));
  };
  const std::size_t n = g.size();
  if (dec.node_count() != n) {
    problem("decomposition covers " + std::to_string(dec.node_count()) + " nodes, graph has " +
            std::to_string(n));
    return report;
  }

  auto edges = g.edges();
  std::vector<std::uint32_t> covered(edges.size(), 0);
  auto find_edge = [&](index_t u, index_t v) -> long long {
    if (u > v) std::swap(u, v);
    auto it = std::lower_bound(edges.begin(), edges.end(), Edge{u, v, 0.0}, [](const Edge& a, const Edge& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    if (it == edges.end() || it->i != u || it->j != v) return -1;
    return it - edges.begin();
  };

  std::vector<std::uint8_t> seen(n);
  for (std::size_t j = 0; j < dec.class_count(); ++j) {
    std::fill(seen.begin(), seen.end(), 0);
    const auto& cls = dec.class_at(j);
    for (std::size_t c = 0; c < cls.chain_count(); ++c) {
      auto ch = cls.chain(c);
      for (std::size_t k = 0; k < ch.size(); ++k) {
        const index_t v = ch.nodes[k];
        if (seen[v]) problem("class " + std::to_string(j) + ": node " + std::to_string(v) + " used twice");
        seen[v] = 1;
        if (k + 1 == ch.size()) continue;
        const index_t u = ch.nodes[k + 1];
        const long long e = find_edge(v, u);
        if (e < 0) {
          problem("class " + std::to_string(j) + ": (" + std::to_string(v) + ", " + std::to_string(u) +
                  ") is not an edge of the graph");
          continue;
        }
        if (ch.weights[k] != edges[e].weight) {
          problem("class " + std::to_string(j) + ": weight mismatch on edge (" + std::to_string(edges[e].i) +
                  ", " + std::to_string(edges[e].j) + ")");
        }
        ++covered[e];
      }
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (covered[e] != 1) {
      problem("edge (" + std::to_string(edges[e].i) + ", " + std::to_string(edges[e].j) + ") covered " +
              std::to_string(covered[e]) + " times");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n);
  for (int trial = 0; trial < 100; ++trial) {
    for (auto& v : x) v = dist(rng);
    const double whole = tv_value(g, x);
    double parts = 0.0;
    for (const auto& cls : dec.classes()) parts += class_tv_value(cls, x);
    if (std::abs(whole - parts) > 1e-10 * std::max(1.0, std::abs(whole))) {
      problem("sum of class TVs " + std::to_string(parts) + " differs from f(x) = " + std::to_string(whole));
      break;
    }
  }
  return report;
}

inline ValidationReport validate(const ChainDecomposition& dec, const GridEnergy& g) {
  return validate(dec, g.graph());
}

}  // namespace paracut
