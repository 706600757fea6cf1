#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace protosel {

// Selected prototypes, ordered by ascending stream index.
struct Solution {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  double objective = 0.0;
  std::optional<double> threshold;  // winning tau for threshold-ladder runs

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// Work counters shared by the streaming engines.
struct StreamCounters {
  std::size_t elements = 0;
  std::size_t gradient_evals = 0;
  std::size_t kernel_evals = 0;
  std::size_t qp_solves = 0;
  std::size_t accepted_elements = 0;   // joined at least one candidate set
  std::size_t rejected_elements = 0;
  std::size_t solves_on_rejected = 0;  // QP solves charged to rejected elements
  std::size_t max_solves_per_element = 0;
  std::size_t peak_tracked = 0;        // stored candidate points at any time
};

inline Solution make_solution(const std::vector<std::size_t>& indices, const Eigen::VectorXd& weights,
                              double objective) {
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  Solution s;
  s.objective = objective;
  for (std::size_t o : order) {
    s.indices.push_back(indices[o]);
    s.weights.push_back(weights[static_cast<Eigen::Index>(o)]);
  }
  return s;
}

}  // namespace protosel
