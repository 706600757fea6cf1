#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "protosel/kernel.hpp"

namespace protosel::synthetic {

using Rng = std::mt19937_64;

struct Cluster {
  std::vector<double> center;
  double spread = 1.0;  // isotropic standard deviation
  std::size_t count = 0;
  int label = 0;
};

inline std::vector<DataPoint> normal_cloud(std::size_t n, std::size_t d, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<DataPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].stream_index = i;
    out[i].features.resize(d);
    for (auto& v : out[i].features) v = z(rng);
  }
  return out;
}

// Samples every cluster, shuffles the rows, and numbers them 0..n-1.
inline std::vector<DataPoint> mixture(const std::vector<Cluster>& clusters, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<DataPoint> out;
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.count; ++i) {
      DataPoint p;
      p.label = c.label;
      p.features.resize(c.center.size());
      for (std::size_t j = 0; j < c.center.size(); ++j) p.features[j] = c.center[j] + c.spread * z(rng);
      out.push_back(std::move(p));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].stream_index = i;
  return out;
}

// `classes` clusters on a circle of the given radius in the plane, equal
// counts, spreads cycling through `spreads`.
inline std::vector<Cluster> ring_clusters(std::size_t classes, std::size_t per_class, double radius,
                                          const std::vector<double>& spreads) {
  std::vector<Cluster> out;
  for (std::size_t c = 0; c < classes; ++c) {
    const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(c) / static_cast<double>(classes);
    out.push_back(Cluster{{radius * std::cos(angle), radius * std::sin(angle)},
                          spreads[c % spreads.size()],
                          per_class,
                          static_cast<int>(c)});
  }
  return out;
}

// Mean-discrepancy instance over a point set: Gaussian kernel with
// median-heuristic bandwidth and exact mean similarities to the same set.
struct PointInstance {
  std::vector<DataPoint> points;
  KernelConfig kernel;
  Eigen::VectorXd mu;
  Eigen::MatrixXd K;
};

inline PointInstance point_instance(std::vector<DataPoint> points, KernelConfig kernel) {
  PointInstance inst;
  inst.kernel = kernel;
  inst.K = kernel_matrix(points, inst.kernel);
  const auto est = mean_vector(points, points, inst.kernel);
  inst.mu.resize(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) inst.mu[static_cast<Eigen::Index>(i)] = est.at(points[i].stream_index);
  inst.points = std::move(points);
  return inst;
}

inline PointInstance point_instance(std::vector<DataPoint> points, std::uint64_t seed = 0) {
  const KernelConfig kernel{median_heuristic(points, seed).bandwidth};
  return point_instance(std::move(points), kernel);
}

// Same, but mu is taken against a separate target sample.
inline PointInstance target_instance(std::vector<DataPoint> source, const std::vector<DataPoint>& target,
                                     std::uint64_t seed = 0) {
  PointInstance inst;
  inst.kernel.bandwidth = median_heuristic(source, seed).bandwidth;
  inst.K = kernel_matrix(source, inst.kernel);
  const auto est = target_mean(target, source, inst.kernel);
  inst.mu.resize(static_cast<Eigen::Index>(source.size()));
  for (std::size_t i = 0; i < source.size(); ++i) inst.mu[static_cast<Eigen::Index>(i)] = est.at(source[i].stream_index);
  inst.points = std::move(source);
  return inst;
}

// Generic PSD instance K = A A' / r with mixed-sign mu.
struct MatrixInstance {
  Eigen::VectorXd mu;
  Eigen::MatrixXd K;
};

inline MatrixInstance random_psd_instance(std::size_t n, std::size_t rank, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = z(rng);
  MatrixInstance inst;
  inst.K = A * A.transpose() / static_cast<double>(rank);
  inst.K = 0.5 * (inst.K + inst.K.transpose());
  inst.mu.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < inst.mu.size(); ++i) inst.mu[i] = u(rng);
  return inst;
}

}  // namespace protosel::synthetic
