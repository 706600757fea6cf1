#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "protosel/oracle.hpp"
#include "protosel/synthetic.hpp"
#include "protosel/verify.hpp"

using namespace protosel;
using oracle::IndexSet;

namespace {

synthetic::PointInstance cloud(std::size_t n, std::uint64_t seed) {
  synthetic::Rng rng(seed);
  return synthetic::point_instance(synthetic::normal_cloud(n, 2, rng));
}

}  // namespace

TEST(Enumeration, SubsetCountsAndOrder) {
  std::vector<IndexSet> seen;
  oracle::for_each_subset(4, 2, [&](const IndexSet& s) { seen.push_back(s); });
  ASSERT_EQ(seen.size(), 10u);  // 4 + 6
  EXPECT_EQ(seen[0], (IndexSet{0}));
  EXPECT_EQ(seen[1], (IndexSet{0, 1}));
  EXPECT_EQ(seen.back(), (IndexSet{3}));
  std::size_t combos = 0;
  oracle::for_each_combination(7, 3, [&](const IndexSet&) { ++combos; });
  EXPECT_EQ(combos, 35u);
}

TEST(ExhaustiveOptimum, IdentityKernel) {
  const auto opt = oracle::exhaustive_optimum(Eigen::Vector3d(3, 1, 2), Eigen::Matrix3d::Identity(), 2);
  EXPECT_EQ(opt.subset, (IndexSet{0, 2}));
  EXPECT_NEAR(opt.value, 6.5, 1e-12);
}

TEST(ExhaustiveOptimum, FullSupportWhenMEqualsN) {
  const auto inst = cloud(4, 1);
  const auto opt = oracle::exhaustive_optimum(inst.mu, inst.K, 4);
  EXPECT_NEAR(opt.value, set_value(inst.mu, inst.K, IndexSet{0, 1, 2, 3}), 1e-12);
}

TEST(ExhaustiveOptimum, DominatesProtoBasicAndGreedy) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = cloud(12, s);
    const auto opt = oracle::exhaustive_optimum(inst.mu, inst.K, 3);
    const auto pb = verify::run_protobasic(inst.mu, inst.K, 3);
    const auto gr = oracle::batch_greedy(inst.mu, inst.K, 3);
    const auto params = oracle::rsc_rsm_constants(inst.K, 3);
    EXPECT_GE(opt.value + 1e-12, pb.objective);
    EXPECT_GE(opt.value + 1e-12, gr.objective);
    EXPECT_GE(pb.objective, params.kappa(3) * opt.value - 1e-9);
  }
}

TEST(ExhaustiveOptimum, BudgetEnforced) {
  const Eigen::VectorXd mu = Eigen::VectorXd::Ones(26);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(26, 26);
  EXPECT_THROW(oracle::exhaustive_optimum(mu, K, 2), InputError);
  EXPECT_THROW(oracle::exhaustive_optimum(mu.head(10), K.topLeftCorner(10, 10), 5), InputError);
  EXPECT_THROW(oracle::rsc_rsm_constants(K, 3), InputError);
  EXPECT_THROW(oracle::rsc_rsm_constants(K.topLeftCorner(10, 10), 7), InputError);
}

TEST(BatchGreedy, IdentityPicksTopPositiveMu) {
  Eigen::VectorXd mu(5);
  mu << 0.2, -1.0, 0.9, 0.5, 0.1;
  const auto sol = oracle::batch_greedy(mu, Eigen::MatrixXd::Identity(5, 5), 3);
  EXPECT_EQ(sol.indices, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(BatchGreedy, SingletonUsesDiagonal) {
  // f({j}) = (mu_j+)^2 / (2 K_jj): the larger mu loses to a smaller diagonal.
  Eigen::Vector2d mu(1.0, 0.8);
  Eigen::Matrix2d K;
  K << 4.0, 0.1, 0.1, 1.0;
  const auto sol = oracle::batch_greedy(mu, K, 1);
  EXPECT_EQ(sol.indices, (std::vector<std::size_t>{1}));
  EXPECT_NEAR(sol.objective, 0.32, 1e-12);
}

TEST(RscRsm, IdentityConstants) {
  const auto p = oracle::rsc_rsm_constants(Eigen::MatrixXd::Identity(6, 6), 4);
  for (std::size_t k = 1; k <= 4; ++k) {
    EXPECT_NEAR(p.c_at(k), 1.0, 1e-12);
    EXPECT_NEAR(p.C_at(k), 1.0, 1e-12);
  }
}

TEST(RscRsm, RankOneBlock) {
  const auto p = oracle::rsc_rsm_constants(Eigen::MatrixXd::Ones(2, 2), 2);
  EXPECT_EQ(p.c_at(2), 0.0);
  EXPECT_NEAR(p.C_at(2), 2.0, 1e-12);
  EXPECT_TRUE(p.degenerate(2));
}

TEST(RscRsm, MatchesJacobiEnumeration) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = cloud(9, s + 20);
    const auto p = oracle::rsc_rsm_constants(inst.K, 4);
    for (int k = 1; k <= 4; ++k) {
      const auto [lo, hi] = reference::principal_extremes(inst.K, k);
      EXPECT_NEAR(p.C_at(static_cast<std::size_t>(k)), hi, 1e-10);
      const double c = p.c_at(static_cast<std::size_t>(k));
      if (c > 0.0) {
        EXPECT_NEAR(c, lo, 1e-10);
      } else {
        EXPECT_LE(lo, 1e-10);  // clamped round-off
      }
    }
  }
}

TEST(RscRsm, Monotone) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = oracle::rsc_rsm_constants(cloud(10, s).K, 5);
    for (std::size_t k = 1; k < 5; ++k) {
      EXPECT_GE(p.c_at(k) + 1e-12, p.c_at(k + 1));
      EXPECT_LE(p.C_at(k), p.C_at(k + 1) + 1e-12);
      EXPECT_LE(p.c_at(k), p.C_at(k));
      EXPECT_GE(p.c_at(k), 0.0);
    }
  }
}

TEST(SubmodularityRatio, ModularUnderIdentity) {
  Eigen::VectorXd mu(5);
  mu << 0.5, 0.7, 0.2, 0.9, 0.4;
  const auto r = oracle::submodularity_ratio(mu, Eigen::MatrixXd::Identity(5, 5), {0, 2}, {1, 3});
  ASSERT_TRUE(r.gamma);
  EXPECT_NEAR(*r.gamma, 1.0, 1e-12);
}

TEST(SubmodularityRatio, DegenerateWhenNoGain) {
  Eigen::Vector3d mu(0.5, -0.2, -0.3);
  const auto r = oracle::submodularity_ratio(mu, Eigen::Matrix3d::Identity(), {0}, {1, 2});
  EXPECT_TRUE(r.degenerate());
  EXPECT_THROW(oracle::submodularity_ratio(mu, Eigen::Matrix3d::Identity(), {0}, {0, 1}), InputError);
}

TEST(SubmodularityRatio, SubmodularFunctionHasRatioAtLeastOne) {
  // Fixed weights 1/m: g(S) = l(1_S / m). Entrywise non-negative K makes every
  // marginal gain shrink as S grows, so g is submodular.
  const std::size_t m = 4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = cloud(10, s + 40);
    const double w = 1.0 / static_cast<double>(m);
    const oracle::SetFunction g = [&](const IndexSet& S) {
      double v = 0.0;
      for (auto i : S) {
        v += w * inst.mu[static_cast<Eigen::Index>(i)];
        for (auto j : S) v -= 0.5 * w * w * inst.K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      return v;
    };
    synthetic::Rng rng(s);
    const auto [L, S] = verify::draw_pair(10, 5, rng);
    const auto r = oracle::submodularity_ratio(g, L, S);
    if (r.gamma) {
      EXPECT_GE(*r.gamma, 1.0 - 1e-9) << "seed " << s;
    }
  }
}

TEST(Impossibility, GammaEqualsK) {
  EXPECT_EQ(oracle::impossibility_gamma(1), 1.0);
  EXPECT_EQ(oracle::impossibility_gamma(3), 3.0);
  EXPECT_EQ(oracle::impossibility_gamma(10), 10.0);
  EXPECT_THROW(oracle::impossibility_gamma(0), InputError);
}

TEST(VerifySuite, SmallBudgetPasses) {
  verify::VerifyConfig cfg;
  cfg.seed = 3;
  cfg.trials = 25;
  const auto rep = verify::run_all(cfg);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed()) << c.name << " worst " << c.worst_margin;
  EXPECT_TRUE(rep.passed());
}

TEST(VerifySuite, DuplicatePointsAreSkippedNotFailed) {
  verify::VerifyConfig cfg;
  cfg.trials = 20;
  const auto pts = verify::duplicate_points(1);
  const auto inst = synthetic::point_instance(pts);
  const auto params = oracle::rsc_rsm_constants(inst.K, 2);
  EXPECT_EQ(params.c_at(2), 0.0);
  const auto sandwich = verify::check_gain_sandwich(cfg, &pts, "dup");
  const auto ratio = verify::check_ratio_bounds(cfg, &pts, "dup");
  EXPECT_TRUE(sandwich.passed());
  EXPECT_TRUE(ratio.passed());
  EXPECT_GT(sandwich.skipped + ratio.skipped, 0u);
}
