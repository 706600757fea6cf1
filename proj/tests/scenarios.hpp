#pragma once

// Synthetic workloads shared by the acceptance binary and the unit tests.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "protosel/protobasic.hpp"
#include "protosel/protostream.hpp"
#include "protosel/synthetic.hpp"

namespace protosel::scenario {

// 3 clusters of 100 on a circle of radius 3; one tight, two broad.
inline synthetic::PointInstance three_cluster(std::uint64_t seed) {
  synthetic::Rng rng(seed);
  auto pts = synthetic::mixture(synthetic::ring_clusters(3, 100, 3.0, {0.5, 1.0, 1.0}), rng);
  return synthetic::point_instance(std::move(pts), seed);
}

// 5 balanced classes of 60 on a circle of radius 4, spreads alternating.
// `bandwidth` overrides the median heuristic when positive.
inline synthetic::PointInstance five_class(std::uint64_t seed, double bandwidth = 0.0) {
  synthetic::Rng rng(seed);
  auto pts = synthetic::mixture(synthetic::ring_clusters(5, 60, 4.0, {0.5, 1.0}), rng);
  if (bandwidth > 0.0) return synthetic::point_instance(std::move(pts), KernelConfig{bandwidth});
  return synthetic::point_instance(std::move(pts), seed);
}

// Source: the five-class mixture. Target: a fresh sample of class `label` only.
inline synthetic::PointInstance shifted_target(std::uint64_t seed, int label) {
  synthetic::Rng rng(seed);
  const auto clusters = synthetic::ring_clusters(5, 60, 4.0, {0.5, 1.0});
  auto source = synthetic::mixture(clusters, rng);
  auto only = clusters[static_cast<std::size_t>(label)];
  only.count = 100;
  const auto target = synthetic::mixture({only}, rng);
  return synthetic::target_instance(std::move(source), target, seed);
}

struct Run {
  Solution solution;
  StreamCounters counters;
  std::size_t max_live_sets = 0;
  std::vector<SaturationEvent> saturations;
  double max_kkt_residual = 0.0;
};

inline std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

inline auto matrix_kernel(const Eigen::MatrixXd& K) {
  return [&K](std::size_t a, std::size_t b) { return K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)); };
}

// Items are row numbers into the instance; `order` is the arrival order.
inline Run run_stream(const synthetic::PointInstance& inst, std::size_t m, double eps,
                      const std::vector<std::size_t>& order) {
  ProtoStream<std::size_t, decltype(matrix_kernel(inst.K))> ps(StreamConfig{m, eps, {}}, matrix_kernel(inst.K));
  Run r;
  for (auto j : order) {
    ps.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
    r.max_live_sets = std::max(r.max_live_sets, ps.sets().size());
    for (const auto& [e, s] : ps.sets())
      if (s.size() > 0) r.max_kkt_residual = std::max(r.max_kkt_residual, s.solution.kkt_residual);
  }
  r.solution = ps.finalize();
  r.counters = ps.counters();
  r.saturations = ps.saturations();
  return r;
}

inline Run run_basic(const synthetic::PointInstance& inst, std::size_t m, const std::vector<std::size_t>& order) {
  ProtoBasic<std::size_t> pb(m);
  for (auto j : order) pb.offer(j, inst.mu[static_cast<Eigen::Index>(j)], j);
  Run r;
  r.solution = pb.finalize(matrix_kernel(inst.K));
  r.counters = pb.counters();
  return r;
}

inline std::vector<DataPoint> rows_of(const synthetic::PointInstance& inst, const Solution& s) {
  std::vector<DataPoint> out;
  for (auto i : s.indices) out.push_back(inst.points[i]);
  return out;
}

}  // namespace protosel::scenario
