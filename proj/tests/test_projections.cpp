#include <gtest/gtest.h>

#include <random>

#include "paracut/projections.hpp"
#include "paracut/random.hpp"
#include "support/oracles.hpp"

using namespace paracut;
using paracut::testing::random_vector;

namespace {

BlockVector random_blocks(std::mt19937_64& rng, const ChainDecomposition& dec, double scale) {
  BlockVector v = BlockVector::zeros_like(dec);
  for (std::size_t j = 0; j < v.blocks(); ++j) {
    auto r = random_vector(rng, v.length(), -scale, scale);
    for (std::size_t i = 0; i < v.length(); ++i) v.block(j)[i] = dec.support(j)[i] ? r[i] : 0.0;
  }
  return v;
}

// A random point of the chain polytope: partial sums drawn inside the tube.
std::vector<double> random_chain_point(std::mt19937_64& rng, std::span<const double> a) {
  std::vector<double> y(a.size() + 1);
  double prev = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::uniform_real_distribution<double> u(-a[k], a[k]);
    const double s = u(rng);
    y[k] = s - prev;
    prev = s;
  }
  y[a.size()] = -prev;
  return y;
}

double norm2(std::span<const double> a, std::span<const double> b) { return squared_distance(a, b); }

}  // namespace

TEST(ProjectK, ZeroMapsToZero) {
  auto g = random_grid(GridShape({4, 5}, Connectivity::grid2d_8), 1);
  auto dec = decompose_grid(g);
  auto v = BlockVector::zeros_like(dec);
  EXPECT_EQ(project_K(dec, v), v);
}

TEST(ProjectK, IdempotentAndFeasible) {
  std::mt19937_64 rng(2);
  for (auto conn : {Connectivity::grid2d_4, Connectivity::grid2d_8, Connectivity::grid3d_6}) {
    std::vector<std::size_t> dims{4, 5};
    if (conn == Connectivity::grid3d_6) dims.push_back(3);
    auto g = random_grid(GridShape(dims, conn), 3);
    auto dec = decompose_grid(g);
    for (int t = 0; t < 20; ++t) {
      auto v = random_blocks(rng, dec, 5.0);
      auto p = project_K(dec, v);
      EXPECT_TRUE(in_K(dec, p));
      auto pp = project_K(dec, p);
      for (std::size_t k = 0; k < p.flat().size(); ++k) EXPECT_NEAR(pp.flat()[k], p.flat()[k], 1e-9);
    }
  }
}

TEST(ProjectK, InPlaceMatchesOutOfPlace) {
  std::mt19937_64 rng(4);
  auto g = random_grid(GridShape({6, 6}, Connectivity::grid2d_8), 5);
  auto dec = decompose_grid(g);
  auto v = random_blocks(rng, dec, 3.0);
  auto expect = project_K(dec, v);
  project_K(dec, v, v);
  EXPECT_EQ(v, expect);
}

TEST(ProjectK, SampledVariationalCheck) {
  std::mt19937_64 rng(6);
  auto g = random_grid(GridShape({1, 9}, Connectivity::grid2d_4), 7);
  auto dec = decompose_grid(g);
  ASSERT_EQ(dec.class_count(), 1u);
  auto weights = dec.class_at(0).chain(0).weights;
  for (int t = 0; t < 5; ++t) {
    auto v = random_blocks(rng, dec, 4.0);
    auto p = project_K(dec, v);
    const double best = norm2(v.flat(), p.flat());
    for (int s = 0; s < 1000; ++s) {
      auto y = random_chain_point(rng, weights);
      ASSERT_TRUE(chain_dual_feasible(y, weights));
      ASSERT_LE(best, norm2(v.flat(), y) + 1e-12);
    }
  }
}

TEST(ProjectK, MoreauIdentityPerChain) {
  std::mt19937_64 rng(8);
  auto g = random_grid(GridShape({5, 7}, Connectivity::grid2d_4), 9);
  auto dec = decompose_grid(g);
  auto v = random_blocks(rng, dec, 3.0);
  auto p = project_K(dec, v);
  for (const auto& ref : dec.chains()) {
    auto chain = dec.chain(ref);
    std::vector<double> sig;
    for (auto node : chain.nodes) sig.push_back(v.block(ref.cls)[node]);
    auto x = tv1d_prox(sig, chain.weights);
    for (std::size_t k = 0; k < sig.size(); ++k) {
      EXPECT_DOUBLE_EQ(x[k] + p.block(ref.cls)[chain.nodes[k]], sig[k]);
    }
  }
}

TEST(ProjectK, ReflectionIsNonexpansive) {
  std::mt19937_64 rng(10);
  auto g = random_grid(GridShape({4, 4}, Connectivity::grid2d_8), 11);
  auto dec = decompose_grid(g);
  for (int t = 0; t < 100; ++t) {
    auto u = random_blocks(rng, dec, 3.0);
    auto v = random_blocks(rng, dec, 3.0);
    EXPECT_LE(distance(reflect_K(dec, u), reflect_K(dec, v)), distance(u, v) + 1e-9);
    EXPECT_LE(distance(project_K(dec, u), project_K(dec, v)), distance(u, v) + 1e-9);
  }
}

TEST(ProjectL, HandExample) {
  // Two classes both covering nodes 0 and 1, so d = 2 everywhere.
  std::vector<index_t> nodes{0, 1};
  std::vector<double> a01{1.0};
  ChainClass a, b;
  a.add_chain(nodes, a01);
  b.add_chain(nodes, a01);
  ChainDecomposition dec(2, {a, b});
  BlockVector v(2, 2);
  v.block(0)[0] = 1.0;
  std::vector<double> w{2.0, 0.0};
  auto lam = project_L(dec, w, v);
  EXPECT_DOUBLE_EQ(lam.block(0)[0], 1.5);
  EXPECT_DOUBLE_EQ(lam.block(1)[0], 0.5);
  EXPECT_DOUBLE_EQ(lam.block(0)[0] + lam.block(1)[0], 2.0);
}

TEST(ProjectL, FeasibleInputUnchanged) {
  std::mt19937_64 rng(12);
  auto g = random_grid(GridShape({3, 4}, Connectivity::grid2d_4), 13);
  auto dec = decompose_grid(g);
  auto v = random_blocks(rng, dec, 2.0);
  auto w = aggregate(v);
  auto lam = project_L(dec, w, v);
  for (std::size_t k = 0; k < v.flat().size(); ++k) EXPECT_NEAR(lam.flat()[k], v.flat()[k], 1e-12);
}

TEST(ProjectL, SumsToWAndIdempotentUnderPartialSupport) {
  std::mt19937_64 rng(14);
  auto g = random_grid(GridShape({5, 6}, Connectivity::grid2d_8), 15);
  auto dec = decompose_grid(g);
  auto w = supported_unary(dec, g.unary());
  for (int t = 0; t < 20; ++t) {
    auto v = random_blocks(rng, dec, 3.0);
    auto lam = project_L(dec, w, v);
    auto s = aggregate(lam);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], w[i], 1e-12);
    for (std::size_t j = 0; j < lam.blocks(); ++j) {
      for (std::size_t i = 0; i < lam.length(); ++i) {
        if (!dec.support(j)[i]) EXPECT_EQ(lam.block(j)[i], 0.0);
      }
    }
    auto again = project_L(dec, w, lam);
    for (std::size_t k = 0; k < lam.flat().size(); ++k) EXPECT_NEAR(again.flat()[k], lam.flat()[k], 1e-12);
  }
}

TEST(ProjectL, SampledVariationalCheck) {
  std::mt19937_64 rng(16);
  auto g = random_grid(GridShape({5, 6}, Connectivity::grid2d_8), 17);
  auto dec = decompose_grid(g);
  auto w = supported_unary(dec, g.unary());
  auto v = random_blocks(rng, dec, 3.0);
  auto lam = project_L(dec, w, v);
  const double best = distance(v, lam);
  for (int s = 0; s < 1000; ++s) {
    // Feasible sample: random blocks on the support, residual dumped on the first covering class.
    auto mu = random_blocks(rng, dec, 3.0);
    auto sum = aggregate(mu);
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < mu.blocks(); ++j) {
        if (dec.support(j)[i]) {
          mu.block(j)[i] += w[i] - sum[i];
          break;
        }
      }
    }
    ASSERT_LE(best, distance(v, mu) + 1e-12);
  }
}

TEST(ProjectL, ReflectionIsInvolution) {
  std::mt19937_64 rng(18);
  auto g = random_grid(GridShape({4, 4, 2}, Connectivity::grid3d_6), 19);
  auto dec = decompose_grid(g);
  auto w = supported_unary(dec, g.unary());
  for (int t = 0; t < 20; ++t) {
    auto v = random_blocks(rng, dec, 3.0);
    auto back = reflect_L(dec, w, reflect_L(dec, w, v));
    for (std::size_t k = 0; k < v.flat().size(); ++k) EXPECT_NEAR(back.flat()[k], v.flat()[k], 1e-12);
    auto lam = project_L(dec, w, v);
    auto fixed = reflect_L(dec, w, lam);
    for (std::size_t k = 0; k < v.flat().size(); ++k) EXPECT_NEAR(fixed.flat()[k], lam.flat()[k], 1e-12);
  }
}

TEST(ProjectL, UncoveredNodeWithUnaryThrows) {
  auto g = random_grid(GridShape({1, 1}, Connectivity::grid2d_4), 20);
  auto dec = decompose_grid(g);
  std::vector<double> w{1.0};
  EXPECT_THROW(project_L(dec, w, BlockVector::zeros_like(dec)), invalid_input);
  EXPECT_EQ(supported_unary(dec, w), std::vector<double>{0.0});
}

TEST(Aggregate, ZeroAndSingleClass) {
  auto g = random_grid(GridShape({1, 5}, Connectivity::grid2d_4), 21);
  auto dec = decompose_grid(g);
  EXPECT_EQ(aggregate(BlockVector::zeros_like(dec)), std::vector<double>(5, 0.0));
  std::mt19937_64 rng(22);
  auto v = random_blocks(rng, dec, 1.0);
  auto s = aggregate(v);
  EXPECT_TRUE(std::equal(s.begin(), s.end(), v.block(0).begin()));
}

TEST(Projections, ThreadCountInvariant) {
  std::mt19937_64 rng(23);
  auto g = random_grid(GridShape({40, 37}, Connectivity::grid2d_8), 24);
  auto dec = decompose_grid(g);
  auto w = supported_unary(dec, g.unary());
  auto v = random_blocks(rng, dec, 3.0);
  auto k1 = project_K(dec, v, 1);
  auto l1 = project_L(dec, w, v, 1);
  for (int threads : {2, 4, 8}) {
    EXPECT_EQ(project_K(dec, v, threads), k1);
    EXPECT_EQ(project_L(dec, w, v, threads), l1);
  }
}
