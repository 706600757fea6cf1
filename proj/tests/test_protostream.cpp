#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "protosel/oracle.hpp"
#include "protosel/protostream.hpp"
#include "scenarios.hpp"

using namespace protosel;

namespace {

struct Identity {
  double operator()(std::size_t a, std::size_t b) const { return a == b ? 1.0 : 0.0; }
};

using IdStream = ProtoStream<std::size_t, Identity>;

// Hand enumeration of {(1+eps)^i : rho/(2m) <= (1+eps)^i <= rho m / 2}.
std::vector<double> expected_taus(double rho, std::size_t m, double eps) {
  std::vector<double> out;
  const double lo = rho / (2.0 * static_cast<double>(m));
  const double hi = rho * static_cast<double>(m) / 2.0;
  for (int i = -200; i <= 200; ++i) {
    const double t = std::pow(1.0 + eps, i);
    if (t >= lo * (1 - 1e-12) && t <= hi * (1 + 1e-12)) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST(ProtoStream, LadderForFirstElement) {
  IdStream ps(StreamConfig{4, 1.0, {}}, Identity{});
  ps.offer(0, 1.0, 0);
  EXPECT_EQ(ps.rho(), 1.0);
  const auto taus = ps.live_taus();
  const std::vector<double> want{0.125, 0.25, 0.5, 1.0, 2.0};
  ASSERT_EQ(taus.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(taus[i], want[i], 1e-9);
}

TEST(ProtoStream, RejectsBadConfig) {
  EXPECT_THROW(IdStream(StreamConfig{4, -0.5, {}}, Identity{}), InputError);
  EXPECT_THROW(IdStream(StreamConfig{4, 0.0, {}}, Identity{}), InputError);
  EXPECT_THROW(IdStream(StreamConfig{0, 0.4, {}}, Identity{}), InputError);
}

TEST(ProtoStream, LadderTracksWindowWithoutDrift) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(-0.5, 3.0);
    const std::size_t m = 2 + s % 5;
    const double eps = 0.1 + 0.05 * static_cast<double>(s % 10);
    IdStream ps(StreamConfig{m, eps, {}}, Identity{});
    for (std::size_t j = 0; j < 60; ++j) {
      ps.offer(j, u(rng), j);
      const auto taus = ps.live_taus();
      const auto want = expected_taus(ps.rho(), m, eps);
      ASSERT_EQ(taus.size(), want.size()) << "seed " << s << " step " << j;
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(taus[i] / want[i], 1.0, 1e-12);
      const auto cap = static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(m * m)) / std::log1p(eps))) + 1;
      EXPECT_LE(taus.size(), cap);
    }
  }
}

TEST(ProtoStream, NonPositiveGradientsNeverOpenTheLadder) {
  IdStream ps(StreamConfig{3, 0.4, {}}, Identity{});
  for (std::size_t j = 0; j < 10; ++j) ps.offer(j, -0.1 * static_cast<double>(j), j);
  EXPECT_EQ(ps.rho(), 0.0);
  EXPECT_TRUE(ps.sets().empty());
  const auto sol = ps.finalize();
  EXPECT_TRUE(sol.empty());
  EXPECT_EQ(sol.objective, 0.0);
}

TEST(ProtoStream, IdentityKernelAdmitsByMuAlone) {
  // Under K = I the residual gradient of a new element is mu_j itself.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const std::size_t m = 3;
  IdStream ps(StreamConfig{m, 0.4, {}}, Identity{});
  for (std::size_t j = 0; j < 40; ++j) {
    const double mu = u(rng);
    const auto before = ps.sets();
    ps.offer(j, mu, j);
    for (const auto& [e, set] : ps.sets()) {
      const auto it = before.find(e);
      const std::size_t had = it == before.end() ? 0 : it->second.size();
      const bool should = had < m && mu >= std::sqrt(2.0 * set.tau / static_cast<double>(m));
      EXPECT_EQ(set.size(), had + (should ? 1 : 0)) << "tau " << set.tau << " element " << j;
    }
  }
}

TEST(ProtoStream, SingleElementStream) {
  IdStream ps(StreamConfig{2, 0.4, {}}, Identity{});
  ps.offer(5, 0.8, 5);
  const auto sol = ps.finalize();
  ASSERT_EQ(sol.size(), 1u);
  EXPECT_EQ(sol.indices[0], 5u);
  EXPECT_NEAR(sol.weights[0], 0.8, 1e-15);
  EXPECT_NEAR(sol.objective, 0.32, 1e-15);
  EXPECT_FALSE(sol.threshold.has_value());  // tie goes to the singleton
}

TEST(ProtoStream, CandidateSetsStayKktOptimal) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = scenario::three_cluster(s);
    ProtoStream<std::size_t, decltype(scenario::matrix_kernel(inst.K))> ps(StreamConfig{6, 0.4, {}},
                                                                           scenario::matrix_kernel(inst.K));
    for (std::size_t j = 0; j < inst.points.size(); ++j) {
      ps.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
      for (const auto& [e, set] : ps.sets()) {
        ASSERT_LE(set.size(), 6u);
        if (set.size() == 0) continue;
        EXPECT_LE(set.solution.kkt_residual, 1e-8);
        const auto cold = solve(restrict_to(inst.mu, inst.K, set.indices));
        EXPECT_NEAR(set.solution.objective, cold.objective, 1e-9);
      }
    }
  }
}

TEST(ProtoStream, RejectionsCostNoSolves) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = scenario::three_cluster(100 + s);
    const auto run = scenario::run_stream(inst, 6, 0.4, scenario::identity_order(inst.points.size()));
    EXPECT_EQ(run.counters.solves_on_rejected, 0u);
    EXPECT_GT(run.counters.rejected_elements, 0u);
    EXPECT_LE(run.counters.max_solves_per_element, run.max_live_sets);
    EXPECT_EQ(run.counters.elements, inst.points.size());
  }
}

TEST(ProtoStream, AppendsGainAtLeastTauOverM) {
  std::size_t saturated = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    synthetic::Rng rng(s);
    const auto inst = synthetic::point_instance(synthetic::normal_cloud(25, 2, rng));
    ProtoStream<std::size_t, decltype(scenario::matrix_kernel(inst.K))> ps(StreamConfig{3, 0.4, {}},
                                                                           scenario::matrix_kernel(inst.K));
    for (std::size_t j = 0; j < 25; ++j) ps.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
    ASSERT_TRUE(std::isfinite(ps.min_append_margin()));
    EXPECT_GE(ps.min_append_margin(), -1e-9);
    for (const auto& ev : ps.saturations()) {
      ++saturated;
      EXPECT_GE(ev.objective, ev.tau / inst.K.diagonal().maxCoeff() - 1e-9);
    }
  }
  EXPECT_GT(saturated, 0u);
}

// Whenever a threshold opens after the first element, replay the whole prefix
// into a fresh set at that threshold (independent solves, same admission
// rule) and confirm nothing from the past would have joined it.
TEST(ProtoStream, NewThresholdsNeverWantPastElements) {
  std::size_t opened = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    synthetic::Rng rng(s);
    auto pts = synthetic::normal_cloud(40, 2, rng);
    std::sort(pts.begin(), pts.end(), [](const DataPoint& a, const DataPoint& b) {
      return std::abs(a.features[0]) > std::abs(b.features[0]);  // outliers first: rho keeps growing
    });
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i].stream_index = i;
    const auto inst = synthetic::point_instance(std::move(pts));
    const std::size_t m = 4;
    ProtoStream<std::size_t, decltype(scenario::matrix_kernel(inst.K))> ps(StreamConfig{m, 0.3, {}},
                                                                           scenario::matrix_kernel(inst.K));
    std::set<int> seen;
    for (std::size_t j = 0; j < 40; ++j) {
      const bool first = ps.sets().empty();
      ps.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
      for (const auto& [e, set] : ps.sets()) {
        if (!seen.insert(e).second || first) continue;
        ++opened;
        std::vector<std::size_t> L;
        Eigen::VectorXd w(0);
        for (std::size_t i = 0; i < j; ++i) {
          if (L.size() >= m) break;
          double g = inst.mu[static_cast<Eigen::Index>(i)];
          for (std::size_t a = 0; a < L.size(); ++a)
            g -= inst.K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(L[a])) * w[static_cast<Eigen::Index>(a)];
          if (g >= std::sqrt(2.0 * set.tau / static_cast<double>(m))) {
            L.push_back(i);
            w = solve(restrict_to(inst.mu, inst.K, L)).weights;
          }
        }
        EXPECT_TRUE(L.empty()) << "seed " << s << " tau " << set.tau << " would take element " << L.front();
      }
    }
  }
  EXPECT_GT(opened, 0u);
}

TEST(ProtoStream, FinalizeReturnsBestCandidate) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = scenario::three_cluster(200 + s);
    ProtoStream<std::size_t, decltype(scenario::matrix_kernel(inst.K))> ps(StreamConfig{6, 0.4, {}},
                                                                           scenario::matrix_kernel(inst.K));
    for (std::size_t j = 0; j < inst.points.size(); ++j) ps.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
    ASSERT_TRUE(ps.best_singleton().has_value());
    const double top = ps.best_singleton().value().mu;
    double best = 0.5 * top * top;
    for (const auto& [e, set] : ps.sets()) best = std::max(best, set.solution.objective);
    const auto sol = ps.finalize();
    EXPECT_NEAR(sol.objective, best, 1e-12);
    EXPECT_LE(sol.size(), 6u);
    for (double w : sol.weights) EXPECT_GE(w, 0.0);
  }
}

TEST(ProtoStream, ThreeClusterQualityVersusGreedy) {
  std::vector<double> ratios;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = scenario::three_cluster(500 + s);
    const auto run = scenario::run_stream(inst, 6, 0.4, scenario::identity_order(inst.points.size()));
    const auto greedy = oracle::batch_greedy(inst.mu, inst.K, 6);
    ratios.push_back(run.solution.objective / greedy.objective);
  }
  std::sort(ratios.begin(), ratios.end());
  EXPECT_GE(0.5 * (ratios[9] + ratios[10]), 0.95);
}
