#pragma once

// Iterative solvers for the decomposed TV dual
//
//   max_{y_j in K_j}  1/2 ||w||^2 - 1/2 ||sum_j y_j - w||^2,
//
// whose optimum s = sum_j y_j gives the TV solution x = w - s. Every solver
// produces a sequence of feasible aggregates s, thresholds x = w - s into a
// labeling, and stops as soon as the discrete gap certifies it.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paracut/certify.hpp"
#include "paracut/decompose.hpp"
#include "paracut/projections.hpp"

namespace paracut {

enum class Algorithm { bcd, ap, aar, fista };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::bcd: return "bcd";
    case Algorithm::ap: return "ap";
    case Algorithm::aar: return "aar";
    case Algorithm::fista: return "fista";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "bcd") return Algorithm::bcd;
  if (s == "ap") return Algorithm::ap;
  if (s == "aar") return Algorithm::aar;
  if (s == "fista") return Algorithm::fista;
  throw invalid_input("unknown algorithm '" + std::string(s) + "'");
}

/// Dual variables kept between runs. Any block may be empty; solvers fill
/// what they use and fall back on the others when warm starting.
struct DualState {
  BlockVector y;       // y_j in K_j
  BlockVector lambda;  // point of L (alternating projections)
  BlockVector z;       // governing sequence of the reflections

  static DualState zeros(const ChainDecomposition& dec) {
    DualState s;
    s.y = BlockVector::zeros_like(dec);
    s.lambda = BlockVector::zeros_like(dec);
    s.z = BlockVector::zeros_like(dec);
    return s;
  }
  bool empty() const { return y.empty() && lambda.empty() && z.empty(); }
  friend bool operator==(const DualState&, const DualState&) = default;
};

/// Absolute slack on the gap test; covers rounding in the gap evaluation.
inline constexpr double kGapSlack = 1e-6;

struct SolverConfig {
  Algorithm algorithm = Algorithm::aar;
  int max_iters = 1000;
  double gap_tol = 0.0;
  double dual_tol = 0.0;  // > 0: also stop once max_i |s_i^k - s_i^(k-1)| <= dual_tol
  int threads = 1;
  int check_every = 10;
  const DualState* warm_start = nullptr;
  const Labeling* reference = nullptr;  // Jaccard target for the trace
  bool record_trace = false;
  bool record_progress = false;
};

struct TraceEntry {
  int iter = 0;
  double gap = 0.0;
  double dual_bound = 0.0;      // sum_i min(s_i - w_i, 0)
  double dual_objective = 0.0;  // 1/2 ||w||^2 - 1/2 ||s - w||^2
  double energy = 0.0;
  double jaccard = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

enum class StopReason { gap, dual_tol, max_iters };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::gap: return "gap";
    case StopReason::dual_tol: return "dual_tol";
    case StopReason::max_iters: return "max_iters";
  }
  return "?";
}

struct SolveResult {
  Labeling labeling;
  std::vector<double> tv_solution;  // w - s
  std::vector<double> s;
  double energy = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool certified = false;
  StopReason stop = StopReason::max_iters;
  double wall_ms = 0.0;
  DualState dual_state;
  std::vector<TraceEntry> trace;
  // One entry per update of the quantity each scheme is known to move
  // monotonically: BCD dual objective after every block, AP distance
  // ||y^k - lambda^k||, AAR step ||z^(k+1) - z^k||. FISTA records its objective
  // 1/2 ||s - w||^2, which need not be monotone.
  std::vector<double> progress;
};

namespace detail {

inline void check_config(const ChainDecomposition& dec, const GridEnergy& g, const SolverConfig& cfg) {
  require(cfg.max_iters >= 1, "max_iters must be at least 1");
  require(cfg.check_every >= 1, "check_every must be at least 1");
  require(cfg.threads >= 1, "threads must be at least 1");
  require(cfg.gap_tol >= 0.0 && cfg.dual_tol >= 0.0, "tolerances must be nonnegative");
  require(dec.node_count() == g.size(), "decomposition does not match the energy");
  if (cfg.reference) require_length(cfg.reference->size(), g.size(), "reference labeling");
}

inline const BlockVector* usable(const BlockVector& v, const ChainDecomposition& dec) {
  if (v.empty()) return nullptr;
  if (v.blocks() != dec.class_count() || v.length() != dec.node_count()) {
    throw invalid_input("warm start has " + std::to_string(v.blocks()) + " blocks of " +
                        std::to_string(v.length()) + ", decomposition needs " + std::to_string(dec.class_count()) +
                        " of " + std::to_string(dec.node_count()));
  }
  return &v;
}

// Shared bookkeeping: gap checks, best iterate, trace and stopping.
class Monitor {
 public:
  Monitor(const GridEnergy& g, const SolverConfig& cfg)
      : g_(g), cfg_(cfg), start_(std::chrono::steady_clock::now()), prev_s_(g.size(), 0.0) {
    const double half_w2 = parallel::sum(g.size(), cfg.threads, [&](std::size_t i) {
      const double w = g.unary()[i];
      return w * w;
    });
    half_w2_ = 0.5 * half_w2;
  }

  bool should_check(int k) const {
    return k == 1 || k % cfg_.check_every == 0 || k == cfg_.max_iters;
  }

  double dual_objective(std::span<const double> s) const {
    auto w = g_.unary();
    return half_w2_ - 0.5 * squared_distance(s, w, cfg_.threads);
  }

  // Called once per iteration with the current aggregate. Returns true to stop.
  bool observe(int k, std::span<const double> s) {
    iterations_ = k;
    bool stationary = false;
    if (cfg_.dual_tol > 0.0 && k > 1) {
      double change = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) change = std::max(change, std::abs(s[i] - prev_s_[i]));
      stationary = change <= cfg_.dual_tol;
    }
    if (cfg_.dual_tol > 0.0) prev_s_.assign(s.begin(), s.end());

    if (!should_check(k) && !stationary) return false;

    std::vector<double> x(s.size());
    auto w = g_.unary();
    parallel::for_each(x.size(), cfg_.threads, [&](std::size_t i) { x[i] = w[i] - s[i]; });
    Labeling label = threshold(x);
    Certificate cert = discrete_gap(g_, label, s, cfg_.threads);

    if (cfg_.record_trace) {
      TraceEntry e;
      e.iter = k;
      e.gap = cert.gap;
      e.dual_bound = cert.dual_objective;
      e.dual_objective = dual_objective(s);
      e.energy = cert.primal_energy;
      if (cfg_.reference) e.jaccard = jaccard_distance(label, *cfg_.reference);
      e.wall_ms = elapsed_ms();
      trace_.push_back(e);
      if (!cfg_.reference) trace_labels_.push_back(label);
    }

    // A certifying iterate replaces the best one even when an earlier gap
    // was smaller; both are optimal and the latest matches the dual state.
    const bool certifies = cert.gap <= cfg_.gap_tol + kGapSlack;
    if (certifies || cert.gap < best_.gap) {
      best_.labeling = std::move(label);
      best_.tv_solution = std::move(x);
      best_.s.assign(s.begin(), s.end());
      best_.energy = cert.primal_energy;
      best_.gap = cert.gap;
    }
    if (certifies) {
      stop_ = StopReason::gap;
      certified_ = true;
      return true;
    }
    if (stationary) {
      stop_ = StopReason::dual_tol;
      return true;
    }
    return false;
  }

  SolveResult finish(DualState state, std::vector<double> progress) {
    SolveResult r = std::move(best_);
    r.iterations = iterations_;
    r.certified = certified_;
    r.stop = stop_;
    r.wall_ms = elapsed_ms();
    r.dual_state = std::move(state);
    r.progress = std::move(progress);
    if (cfg_.record_trace && !cfg_.reference) {
      for (std::size_t q = 0; q < trace_.size(); ++q) trace_[q].jaccard = jaccard_distance(trace_labels_[q], r.labeling);
    }
    r.trace = std::move(trace_);
    return r;
  }

  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  const GridEnergy& g_;
  const SolverConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  double half_w2_ = 0.0;
  std::vector<double> prev_s_;
  SolveResult best_;
  int iterations_ = 0;
  bool certified_ = false;
  StopReason stop_ = StopReason::max_iters;
  std::vector<TraceEntry> trace_;
  std::vector<Labeling> trace_labels_;
};

inline BlockVector initial_y(const ChainDecomposition& dec, const DualState* warm, int threads) {
  if (warm) {
    if (auto* y = usable(warm->y, dec)) return *y;
    if (auto* z = usable(warm->z, dec)) return project_K(dec, *z, threads);
    if (auto* l = usable(warm->lambda, dec)) return project_K(dec, *l, threads);
  }
  return BlockVector::zeros_like(dec);
}

}  // namespace detail

/// Gradient of 1/2 ||sum_j y_j - w||^2 with respect to each block, restricted
/// to the block's support. Lipschitz with constant r.
inline BlockVector fista_gradient(const ChainDecomposition& dec, std::span<const double> w, const BlockVector& y,
                                  int threads = 1) {
  auto s = aggregate(y, threads);
  BlockVector grad = BlockVector::zeros_like(dec);
  parallel::for_each(dec.node_count(), threads, [&](std::size_t i) {
    const double r = s[i] - w[i];
    for (std::size_t j = 0; j < dec.class_count(); ++j) grad.block(j)[i] = dec.support(j)[i] ? r : 0.0;
  });
  return grad;
}

/// Block coordinate ascent, i.e. cyclic projections:
/// y_j <- Pi_{K_j}(w - sum_{k != j} y_k) for j = 1..r in turn.
inline SolveResult solve_bcd(const GridEnergy& g, const ChainDecomposition& dec, const SolverConfig& cfg) {
  detail::check_config(dec, g, cfg);
  const int threads = cfg.threads;
  const std::size_t n = g.size();
  const std::size_t r = dec.class_count();
  auto w = g.unary();
  detail::Monitor mon(g, cfg);

  BlockVector y = detail::initial_y(dec, cfg.warm_start, threads);
  std::vector<double> s(n), v(n);
  std::vector<double> progress;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    aggregate(y, s, threads);
    for (std::size_t j = 0; j < r; ++j) {
      auto yj = y.block(j);
      parallel::for_each(n, threads, [&](std::size_t i) { v[i] = w[i] - s[i] + yj[i]; });
      parallel::for_each(n, threads, [&](std::size_t i) { s[i] -= yj[i]; });
      project_class(dec, j, v, yj, threads);
      parallel::for_each(n, threads, [&](std::size_t i) { s[i] += yj[i]; });
      if (cfg.record_progress) progress.push_back(mon.dual_objective(s));
    }
    aggregate(y, s, threads);
    if (mon.observe(k, s)) break;
  }
  DualState state;
  state.y = std::move(y);
  return mon.finish(std::move(state), std::move(progress));
}

/// Alternating projections in the product space:
/// y <- Pi_K(lambda), lambda <- Pi_L(y).
inline SolveResult solve_ap(const GridEnergy& g, const ChainDecomposition& dec, const SolverConfig& cfg) {
  detail::check_config(dec, g, cfg);
  const int threads = cfg.threads;
  auto w = supported_unary(dec, g.unary());
  detail::Monitor mon(g, cfg);

  BlockVector lambda;
  const DualState* warm = cfg.warm_start;
  if (warm && detail::usable(warm->lambda, dec)) {
    lambda = project_L(dec, w, warm->lambda, threads);
  } else if (warm && (detail::usable(warm->y, dec) || detail::usable(warm->z, dec))) {
    lambda = project_L(dec, w, detail::initial_y(dec, warm, threads), threads);
  } else {
    lambda = project_L(dec, w, BlockVector::zeros_like(dec), threads);
  }
  BlockVector y = BlockVector::zeros_like(dec);
  std::vector<double> s(g.size());
  std::vector<double> progress;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    project_K(dec, lambda, y, threads);
    aggregate(y, s, threads);
    const bool stop = mon.observe(k, s);
    project_L(dec, w, y, lambda, threads);
    if (cfg.record_progress) progress.push_back(distance(y, lambda, threads));
    if (stop) break;
  }
  DualState state;
  state.y = std::move(y);
  state.lambda = std::move(lambda);
  return mon.finish(std::move(state), std::move(progress));
}

/// Averaged alternating reflections z <- 1/2 (R_L R_K + I) z, read through the
/// shadow y = Pi_K(z). z may drift off to infinity when K and L do not meet;
/// only the shadow enters the stopping test.
inline SolveResult solve_aar(const GridEnergy& g, const ChainDecomposition& dec, const SolverConfig& cfg) {
  detail::check_config(dec, g, cfg);
  const int threads = cfg.threads;
  auto w = supported_unary(dec, g.unary());
  detail::Monitor mon(g, cfg);

  // A warm start restarts from the previous shadow rather than the previous
  // z: z carries a drift that depends on the old w and can be far from any
  // useful point once w changes.
  BlockVector z;
  const DualState* warm = cfg.warm_start;
  if (warm && !warm->empty()) {
    z = detail::initial_y(dec, warm, threads);
  } else {
    z = project_L(dec, w, BlockVector::zeros_like(dec), threads);
  }
  BlockVector y = BlockVector::zeros_like(dec);
  BlockVector t = BlockVector::zeros_like(dec);
  std::vector<double> s(g.size());
  std::vector<double> progress;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    project_K(dec, z, y, threads);
    aggregate(y, s, threads);
    if (mon.observe(k, s)) break;
    // z <- z + Pi_L(2y - z) - y, which equals 1/2 (R_L R_K z + z).
    auto yf = y.flat();
    auto zf = z.flat();
    auto tf = t.flat();
    parallel::for_each(tf.size(), threads, [&](std::size_t q) { tf[q] = 2.0 * yf[q] - zf[q]; });
    project_L(dec, w, t, t, threads);
    parallel::for_each(tf.size(), threads, [&](std::size_t q) { tf[q] -= yf[q]; });
    if (cfg.record_progress) {
      progress.push_back(std::sqrt(parallel::sum(tf.size(), threads, [&](std::size_t q) { return tf[q] * tf[q]; })));
    }
    parallel::for_each(tf.size(), threads, [&](std::size_t q) { zf[q] += tf[q]; });
  }
  DualState state;
  state.y = std::move(y);
  state.z = std::move(z);
  return mon.finish(std::move(state), std::move(progress));
}

/// Accelerated projected gradient on 1/2 ||sum_j y_j - w||^2 over K with the
/// fixed step 1/r. Momentum restarts from scratch on a warm start.
inline SolveResult solve_fista(const GridEnergy& g, const ChainDecomposition& dec, const SolverConfig& cfg) {
  detail::check_config(dec, g, cfg);
  const int threads = cfg.threads;
  const std::size_t n = g.size();
  const std::size_t r = dec.class_count();
  auto w = g.unary();
  detail::Monitor mon(g, cfg);

  BlockVector y = detail::initial_y(dec, cfg.warm_start, threads);
  BlockVector u = y;
  BlockVector next = BlockVector::zeros_like(dec);
  std::vector<double> s(n);
  std::vector<double> progress;
  const double step = r > 0 ? 1.0 / static_cast<double>(r) : 1.0;
  double t = 1.0;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    aggregate(u, s, threads);
    parallel::for_each(n, threads, [&](std::size_t i) {
      const double grad = s[i] - w[i];
      for (std::size_t j = 0; j < r; ++j) next.block(j)[i] = u.block(j)[i] - step * grad;
    });
    project_K(dec, next, next, threads);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    auto nf = next.flat();
    auto yf = y.flat();
    auto uf = u.flat();
    parallel::for_each(nf.size(), threads, [&](std::size_t q) {
      uf[q] = nf[q] + beta * (nf[q] - yf[q]);
      yf[q] = nf[q];
    });
    t = t_next;
    aggregate(y, s, threads);
    if (cfg.record_progress) progress.push_back(0.5 * squared_distance(s, w, threads));
    if (mon.observe(k, s)) break;
  }
  DualState state;
  state.y = std::move(y);
  return mon.finish(std::move(state), std::move(progress));
}

inline SolveResult solve(const GridEnergy& g, const ChainDecomposition& dec, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::bcd: return solve_bcd(g, dec, cfg);
    case Algorithm::ap: return solve_ap(g, dec, cfg);
    case Algorithm::aar: return solve_aar(g, dec, cfg);
    case Algorithm::fista: return solve_fista(g, dec, cfg);
  }
  throw invalid_input("unknown algorithm");
}

inline SolveResult solve(const GridEnergy& g, const SolverConfig& cfg) { return solve(g, decompose_grid(g), cfg); }

}  // namespace paracut
