#include <gtest/gtest.h>

#include <random>

#include "paracut/oracle.hpp"
#include "paracut/random.hpp"
#include "paracut/solvers.hpp"
#include "support/oracles.hpp"

using namespace paracut;

namespace {

constexpr Algorithm kAll[] = {Algorithm::bcd, Algorithm::ap, Algorithm::aar, Algorithm::fista};

GridEnergy small_instance(int seed) {
  switch (seed % 3) {
    case 0: return random_grid(GridShape({4, 4}, Connectivity::grid2d_4), seed);
    case 1: return random_grid(GridShape({3, 4}, Connectivity::grid2d_8), seed);
    default: return random_grid(GridShape({2, 2, 3}, Connectivity::grid3d_6), seed);
  }
}

SolverConfig config(Algorithm a, int check_every = 1) {
  SolverConfig cfg;
  cfg.algorithm = a;
  cfg.max_iters = 20000;
  cfg.check_every = check_every;
  return cfg;
}

}  // namespace

TEST(Solvers, WeightlessConvergesImmediately) {
  auto g = random_grid(GridShape({3, 5}, Connectivity::grid2d_8), 1, {0.0, 0.0, -2.0, 2.0});
  ASSERT_TRUE(g.edges().empty());
  auto dec = decompose_grid(g);
  for (auto a : kAll) {
    auto r = solve(g, dec, config(a));
    EXPECT_TRUE(r.certified) << to_string(a);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.labeling, threshold(g.unary()));
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(r.tv_solution[i], g.unary()[i]);
  }
}

TEST(Solvers, MatchBruteForce) {
  for (int seed = 0; seed < 30; ++seed) {
    auto g = small_instance(seed);
    auto dec = decompose_grid(g);
    auto bf = brute_force_mincut(g);
    for (auto a : kAll) {
      auto r = solve(g, dec, config(a, seed % 2 ? 1 : 10));
      ASSERT_TRUE(r.certified) << to_string(a) << " seed " << seed << " gap " << r.gap;
      EXPECT_NEAR(r.energy, bf.energy, 1e-9) << to_string(a) << " seed " << seed;
      EXPECT_GE(r.gap, -1e-9);
    }
  }
}

TEST(Solvers, EarlyExitIsWithinGapOfOptimum) {
  for (int seed = 0; seed < 20; ++seed) {
    auto g = small_instance(100 + seed);
    auto bf = brute_force_mincut(g);
    for (auto a : kAll) {
      auto cfg = config(a);
      cfg.gap_tol = 0.5;
      auto r = solve(g, cfg);
      ASSERT_TRUE(r.certified);
      EXPECT_LE(r.energy - bf.energy, r.gap + 1e-9);
      EXPECT_LE(r.gap, 0.5 + kGapSlack);
    }
  }
}

TEST(Solvers, EveryCheckedIterateSatisfiesWeakDuality) {
  for (int seed = 0; seed < 10; ++seed) {
    auto g = random_grid(GridShape({6, 6}, Connectivity::grid2d_8), 200 + seed);
    for (auto a : kAll) {
      auto cfg = config(a);
      cfg.record_trace = true;
      auto r = solve(g, cfg);
      ASSERT_FALSE(r.trace.empty());
      for (const auto& e : r.trace) {
        EXPECT_GE(e.gap, -1e-9);
        EXPECT_LE(e.dual_objective, 0.5 * squared_distance(g.unary(), std::vector<double>(g.size(), 0.0)) + 1e-9);
      }
      EXPECT_EQ(r.trace.back().iter, r.iterations);
      EXPECT_EQ(r.trace.back().jaccard, 0.0);
    }
  }
}

TEST(Solvers, MonotoneProgress) {
  for (int seed = 0; seed < 10; ++seed) {
    auto g = random_grid(GridShape({8, 9}, static_cast<Connectivity>(seed % 2)), 300 + seed);
    for (auto a : {Algorithm::bcd, Algorithm::ap, Algorithm::aar}) {
      auto cfg = config(a);
      cfg.record_progress = true;
      cfg.max_iters = 200;
      cfg.gap_tol = 0.0;
      auto r = solve(g, cfg);
      ASSERT_GE(r.progress.size(), 1u);
      for (std::size_t k = 1; k < r.progress.size(); ++k) {
        if (a == Algorithm::bcd) {
          EXPECT_GE(r.progress[k], r.progress[k - 1] - 1e-9) << "bcd step " << k;
        } else {
          EXPECT_LE(r.progress[k], r.progress[k - 1] + 1e-9) << to_string(a) << " step " << k;
        }
      }
    }
  }
}

TEST(Solvers, WarmStartFromConvergedStateStopsAtOnce) {
  for (int seed = 0; seed < 6; ++seed) {
    auto g = random_grid(GridShape({10, 10}, static_cast<Connectivity>(seed % 3 == 2 ? 0 : seed % 3)), 400 + seed);
    auto dec = decompose_grid(g);
    for (auto a : kAll) {
      auto cold = solve(g, dec, config(a, 10));
      ASSERT_TRUE(cold.certified);
      auto cfg = config(a, 10);
      cfg.warm_start = &cold.dual_state;
      auto warm = solve(g, dec, cfg);
      EXPECT_TRUE(warm.certified);
      EXPECT_LE(warm.iterations, cfg.check_every) << to_string(a);
      EXPECT_EQ(warm.iterations, 1) << to_string(a);
    }
  }
}

TEST(Solvers, WarmStartShapeMismatchThrows) {
  auto g = random_grid(GridShape({4, 4}, Connectivity::grid2d_4), 5);
  auto other = random_grid(GridShape({4, 4}, Connectivity::grid2d_8), 5);
  auto state = solve(other, config(Algorithm::aar)).dual_state;
  auto cfg = config(Algorithm::aar);
  cfg.warm_start = &state;
  EXPECT_THROW(solve(g, cfg), invalid_input);
}

TEST(Solvers, ThreadCountDoesNotChangeResults) {
  auto g = random_grid(GridShape({30, 31}, Connectivity::grid2d_8), 6);
  auto dec = decompose_grid(g);
  for (auto a : kAll) {
    auto cfg = config(a, 5);
    cfg.max_iters = 300;
    auto base = solve(g, dec, cfg);
    for (int threads : {2, 4}) {
      cfg.threads = threads;
      auto r = solve(g, dec, cfg);
      EXPECT_EQ(r.labeling, base.labeling) << to_string(a);
      EXPECT_EQ(r.iterations, base.iterations);
      EXPECT_EQ(r.dual_state, base.dual_state) << to_string(a);
    }
  }
}

TEST(Solvers, NonConvergenceReturnsBestIterate) {
  auto g = random_grid(GridShape({20, 20}, Connectivity::grid2d_8), 7);
  auto cfg = config(Algorithm::ap);
  cfg.max_iters = 3;
  cfg.record_trace = true;
  auto r = solve(g, cfg);
  ASSERT_FALSE(r.certified);
  EXPECT_EQ(r.stop, StopReason::max_iters);
  EXPECT_EQ(r.iterations, 3);
  double best = 1e300;
  for (const auto& e : r.trace) best = std::min(best, e.gap);
  EXPECT_EQ(r.gap, best);
  EXPECT_EQ(r.labeling, threshold(r.tv_solution));
  EXPECT_FALSE(r.dual_state.y.empty());
}

TEST(Solvers, DualTolStopsOnStationaryIterates) {
  auto g = random_grid(GridShape({12, 12}, Connectivity::grid2d_4), 8);
  auto cfg = config(Algorithm::bcd, 1000);
  cfg.dual_tol = 1e-3;
  cfg.gap_tol = 0.0;
  auto r = solve(g, cfg);
  EXPECT_TRUE(r.stop == StopReason::dual_tol || r.stop == StopReason::gap);
  EXPECT_LT(r.iterations, cfg.max_iters);
}

TEST(Fista, GradientIsLipschitzWithConstantR) {
  std::mt19937_64 rng(9);
  for (auto conn : {Connectivity::grid2d_4, Connectivity::grid2d_8, Connectivity::grid3d_6}) {
    std::vector<std::size_t> dims{5, 4};
    if (conn == Connectivity::grid3d_6) dims.push_back(3);
    auto g = random_grid(GridShape(dims, conn), 10);
    auto dec = decompose_grid(g);
    const double r = static_cast<double>(dec.class_count());
    for (int t = 0; t < 100; ++t) {
      BlockVector a = BlockVector::zeros_like(dec), b = BlockVector::zeros_like(dec);
      for (auto& v : a.flat()) v = paracut::testing::random_vector(rng, 1, -2.0, 2.0)[0];
      for (auto& v : b.flat()) v = paracut::testing::random_vector(rng, 1, -2.0, 2.0)[0];
      auto ga = fista_gradient(dec, g.unary(), a);
      auto gb = fista_gradient(dec, g.unary(), b);
      EXPECT_LE(distance(ga, gb), r * distance(a, b) + 1e-12);
    }
  }
}

TEST(LevelSets, BestLevelSetOfConvergedSolutionIsThreshold) {
  for (int seed = 0; seed < 20; ++seed) {
    auto g = small_instance(500 + seed);
    auto r = solve(g, config(Algorithm::aar));
    ASSERT_TRUE(r.certified);
    auto bf = brute_force_mincut(g);
    double lowest = 1e300;
    for (const auto& x : level_sets(r.tv_solution)) lowest = std::min(lowest, energy(g, x));
    EXPECT_NEAR(lowest, bf.energy, 1e-9);
    EXPECT_NEAR(energy(g, r.labeling), lowest, 1e-9);
  }
}

TEST(Solvers, ParseAlgorithm) {
  for (auto a : kAll) EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_THROW(parse_algorithm("sgd"), invalid_input);
}
