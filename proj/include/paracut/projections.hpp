#pragma once

// Geometry of the decomposed dual. For a decomposition f = f_1 + ... + f_r,
//
//   K = K_1 x ... x K_r     (K_j: base polytope of f_j, zero off its support)
//   L = { lambda : sum_j lambda_j = w, lambda_j = 0 off support of j }
//
// Projection onto K_j runs chain by chain through the Moreau identity
// Pi_K(v) = v - prox_f(v). Projection onto L spreads the residual
// w - sum_j v_j evenly over the d_i classes covering each node; when every
// node is covered by all r classes this is lambda_j = v_j + (w - sum_k v_k)/r.
//
// Distances are unscaled Euclidean; scaling the objective by r (as in the
// dual-decomposition derivation) changes neither projections nor fixed points.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "paracut/decompose.hpp"
#include "paracut/parallel.hpp"
#include "paracut/tv1d.hpp"

namespace paracut {

/// r stacked vectors of length n, one block per decomposition class.
class BlockVector {
 public:
  BlockVector() = default;
  BlockVector(std::size_t blocks, std::size_t length, double fill = 0.0)
      : blocks_(blocks), length_(length), data_(blocks * length, fill) {}

  static BlockVector zeros_like(const ChainDecomposition& dec) {
    return BlockVector(dec.class_count(), dec.node_count());
  }

  std::size_t blocks() const { return blocks_; }
  std::size_t length() const { return length_; }
  bool empty() const { return data_.empty(); }

  std::span<double> block(std::size_t j) { return std::span<double>(data_).subspan(j * length_, length_); }
  std::span<const double> block(std::size_t j) const {
    return std::span<const double>(data_).subspan(j * length_, length_);
  }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const BlockVector& o) const { return blocks_ == o.blocks_ && length_ == o.length_; }
  friend bool operator==(const BlockVector&, const BlockVector&) = default;

 private:
  std::size_t blocks_ = 0;
  std::size_t length_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require_shape(const ChainDecomposition& dec, const BlockVector& v, const char* what) {
  if (v.blocks() != dec.class_count() || v.length() != dec.node_count()) {
    throw invalid_input(std::string(what) + ": expected " + std::to_string(dec.class_count()) + " blocks of " +
                        std::to_string(dec.node_count()) + ", got " + std::to_string(v.blocks()) + " of " +
                        std::to_string(v.length()));
  }
}

struct ChainScratch {
  TautStringWorkspace ws;
  std::vector<double> signal;
  std::vector<double> prox;

  explicit ChainScratch(std::size_t m) : signal(m), prox(m) { ws.reserve(m); }
};

// dst[chain] = src[chain] - prox(src[chain]). src and dst may alias.
inline void project_chain(const ChainView& chain, std::span<const double> src, std::span<double> dst,
                          ChainScratch& scratch) {
  const std::size_t m = chain.size();
  std::span<double> signal(scratch.signal.data(), m);
  std::span<double> prox(scratch.prox.data(), m);
  for (std::size_t k = 0; k < m; ++k) signal[k] = src[chain.nodes[k]];
  tv1d_prox(signal, chain.weights, prox, scratch.ws);
  for (std::size_t k = 0; k < m; ++k) dst[chain.nodes[k]] = signal[k] - prox[k];
}

}  // namespace detail

/// out = Pi_K(v). `out` may be `v`.
inline void project_K(const ChainDecomposition& dec, const BlockVector& v, BlockVector& out, int threads = 1) {
  detail::require_shape(dec, v, "project_K");
  if (!out.same_shape(v)) out = BlockVector(v.blocks(), v.length());
  const std::size_t n = dec.node_count();
  const std::size_t r = dec.class_count();

  // Coordinates no chain of the class touches project to 0.
  parallel::for_each(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < r; ++j) {
      if (!dec.support(j)[i]) out.block(j)[i] = 0.0;
    }
  });

  const auto chains = dec.chains();
  const std::size_t longest = dec.max_chain_length();
  parallel::for_each_with(
      chains.size(), threads, [&] { return detail::ChainScratch(longest); },
      [&](detail::ChainScratch& scratch, std::size_t c) {
        const auto& ref = chains[c];
        detail::project_chain(dec.chain(ref), v.block(ref.cls), out.block(ref.cls), scratch);
      });
}

inline BlockVector project_K(const ChainDecomposition& dec, const BlockVector& v, int threads = 1) {
  BlockVector out;
  project_K(dec, v, out, threads);
  return out;
}

/// dst = Pi_{K_j}(src) for a single class; src and dst may alias.
inline void project_class(const ChainDecomposition& dec, std::size_t j, std::span<const double> src,
                          std::span<double> dst, int threads = 1) {
  detail::require_length(src.size(), dec.node_count(), "project_class src");
  detail::require_length(dst.size(), dec.node_count(), "project_class dst");
  auto support = dec.support(j);
  parallel::for_each(dst.size(), threads, [&](std::size_t i) {
    if (!support[i]) dst[i] = 0.0;
  });
  const auto& cls = dec.class_at(j);
  parallel::for_each_with(
      cls.chain_count(), threads, [&] { return detail::ChainScratch(cls.max_chain_length()); },
      [&](detail::ChainScratch& scratch, std::size_t c) { detail::project_chain(cls.chain(c), src, dst, scratch); });
}

/// Zeroes w where no class covers the node; those coordinates are decoupled
/// from the dual and cannot be represented in L.
inline std::vector<double> supported_unary(const ChainDecomposition& dec, std::span<const double> w) {
  detail::require_length(w.size(), dec.node_count(), "supported_unary");
  std::vector<double> out(w.begin(), w.end());
  auto deg = dec.degrees();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (deg[i] == 0) out[i] = 0.0;
  }
  return out;
}

/// out = Pi_L(v) for L = { sum_j lambda_j = w }. `out` may be `v`.
inline void project_L(const ChainDecomposition& dec, std::span<const double> w, const BlockVector& v,
                      BlockVector& out, int threads = 1) {
  detail::require_shape(dec, v, "project_L");
  detail::require_length(w.size(), dec.node_count(), "project_L w");
  if (!out.same_shape(v)) out = BlockVector(v.blocks(), v.length());
  const std::size_t r = dec.class_count();
  auto deg = dec.degrees();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (deg[i] == 0 && w[i] != 0.0) {
      throw invalid_input("project_L: node " + std::to_string(i) +
                          " is covered by no class but has nonzero w; L is empty");
    }
  }
  parallel::for_each(w.size(), threads, [&](std::size_t i) {
    if (deg[i] == 0) {
      for (std::size_t j = 0; j < r; ++j) out.block(j)[i] = 0.0;
      return;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
      if (dec.support(j)[i]) total += v.block(j)[i];
    }
    const double shift = (w[i] - total) / deg[i];
    for (std::size_t j = 0; j < r; ++j) {
      out.block(j)[i] = dec.support(j)[i] ? v.block(j)[i] + shift : 0.0;
    }
  });
}

inline BlockVector project_L(const ChainDecomposition& dec, std::span<const double> w, const BlockVector& v,
                             int threads = 1) {
  BlockVector out;
  project_L(dec, w, v, out, threads);
  return out;
}

namespace detail {

inline void reflect_from_projection(const BlockVector& v, BlockVector& proj, int threads) {
  auto src = v.flat();
  auto dst = proj.flat();
  parallel::for_each(dst.size(), threads, [&](std::size_t k) { dst[k] = 2.0 * dst[k] - src[k]; });
}

}  // namespace detail

/// R_K = 2 Pi_K - I.
inline BlockVector reflect_K(const ChainDecomposition& dec, const BlockVector& v, int threads = 1) {
  auto out = project_K(dec, v, threads);
  detail::reflect_from_projection(v, out, threads);
  return out;
}

/// R_L = 2 Pi_L - I.
inline BlockVector reflect_L(const ChainDecomposition& dec, std::span<const double> w, const BlockVector& v,
                             int threads = 1) {
  auto out = project_L(dec, w, v, threads);
  detail::reflect_from_projection(v, out, threads);
  return out;
}

/// s = sum_j y_j, summed in class order.
inline void aggregate(const BlockVector& y, std::span<double> s, int threads = 1) {
  detail::require_length(s.size(), y.length(), "aggregate");
  parallel::for_each(y.length(), threads, [&](std::size_t i) {
    double total = 0.0;
    for (std::size_t j = 0; j < y.blocks(); ++j) total += y.block(j)[i];
    s[i] = total;
  });
}

inline std::vector<double> aggregate(const BlockVector& y, int threads = 1) {
  std::vector<double> s(y.length(), 0.0);
  aggregate(y, s, threads);
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b, int threads = 1) {
  return parallel::sum(a.size(), threads, [&](std::size_t k) {
    const double d = a[k] - b[k];
    return d * d;
  });
}

inline double distance(const BlockVector& a, const BlockVector& b, int threads = 1) {
  return std::sqrt(squared_distance(a.flat(), b.flat(), threads));
}

/// Every block lies in its class polytope (chain-by-chain feasibility, zero
/// off support).
inline bool in_K(const ChainDecomposition& dec, const BlockVector& y, double tol = kDualFeasibilityTol) {
  detail::require_shape(dec, y, "in_K");
  std::vector<double> buf;
  for (const auto& ref : dec.chains()) {
    const auto chain = dec.chain(ref);
    buf.resize(chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) buf[k] = y.block(ref.cls)[chain.nodes[k]];
    if (!chain_dual_feasible(buf, chain.weights, tol)) return false;
  }
  for (std::size_t j = 0; j < dec.class_count(); ++j) {
    for (std::size_t i = 0; i < dec.node_count(); ++i) {
      if (!dec.support(j)[i] && std::abs(y.block(j)[i]) > tol) return false;
    }
  }
  return true;
}

}  // namespace paracut
