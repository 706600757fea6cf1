#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "protosel/errors.hpp"
#include "protosel/nnqp.hpp"
#include "protosel/solution.hpp"

namespace protosel {

struct StreamConfig {
  std::size_t m = 1;
  double epsilon = 0.4;
  SolverOptions solver;
};

// One rung of the threshold ladder: tau = (1+eps)^exponent.
template <class Item>
struct CandidateSet {
  int exponent = 0;
  double tau = 0.0;
  std::vector<std::size_t> indices;  // append order
  std::vector<Item> items;
  Eigen::VectorXd mu;
  Eigen::MatrixXd K;  // kernel block over `items`
  QPSolution solution;

  std::size_t size() const { return indices.size(); }
};

// Recorded when a candidate set reaches cardinality m.
struct SaturationEvent {
  int exponent;
  double tau;
  double objective;
  double max_diagonal;  // largest k(x, x) over the set
};

// Threshold sieve over tau in [rho/(2m), rho*m/2] on the integer-exponent grid
// (1+eps)^i. Each rung keeps its own candidate set; an element joins a rung
// when its gradient at the rung's current optimum clears sqrt(2 tau / m).
// Rejections cost gradient evaluations only; QP solves happen on appends.
template <class Item, class KernelFn>
class ProtoStream {
 public:
  ProtoStream(StreamConfig cfg, KernelFn kernel) : cfg_(cfg), kernel_(std::move(kernel)) {
    if (cfg_.m == 0) throw InputError("ProtoStream needs m >= 1");
    // The CLI keeps epsilon in (0, 1); the ladder itself only needs a ratio above 1.
    if (!(cfg_.epsilon > 0.0) || !std::isfinite(cfg_.epsilon)) throw InputError("epsilon must be positive");
    log_base_ = std::log1p(cfg_.epsilon);
  }

  const StreamConfig& config() const { return cfg_; }
  const StreamCounters& counters() const { return counters_; }
  double rho() const { return rho_; }
  const std::map<int, CandidateSet<Item>>& sets() const { return sets_; }
  const std::vector<SaturationEvent>& saturations() const { return saturations_; }
  // Smallest observed value of (gain - tau / (k_jj m)) over all appends.
  double min_append_margin() const { return min_append_margin_; }

  struct Singleton {
    std::size_t index;
    double mu;
    Item item;
  };
  const std::optional<Singleton>& best_singleton() const { return best_; }

  double tau_of(int exponent) const { return std::pow(1.0 + cfg_.epsilon, exponent); }

  // Exponent window [lo, hi] covered by the current rho, empty when rho = 0.
  std::optional<std::pair<int, int>> window() const {
    if (!(rho_ > 0.0)) return std::nullopt;
    const double m = static_cast<double>(cfg_.m);
    const int lo = static_cast<int>(std::ceil(std::log(rho_ / (2.0 * m)) / log_base_ - 1e-9));
    const int hi = static_cast<int>(std::floor(std::log(rho_ * m / 2.0) / log_base_ + 1e-9));
    return std::make_pair(lo, hi);
  }

  std::vector<double> live_taus() const {
    std::vector<double> out;
    for (const auto& [e, s] : sets_) out.push_back(s.tau);
    return out;
  }

  // Returns the number of candidate sets that admitted the element.
  std::size_t offer(std::size_t index, double mu, const Item& item) {
    ++counters_.elements;
    update_ladder(index, mu, item);

    std::size_t accepted = 0;
    std::size_t solves = 0;
    const double m = static_cast<double>(cfg_.m);
    for (auto& [exponent, set] : sets_) {
      if (set.size() >= cfg_.m) continue;
      std::vector<double> row(set.size());
      for (std::size_t i = 0; i < set.size(); ++i) row[i] = kernel_(item, set.items[i]);
      counters_.kernel_evals += row.size();
      ++counters_.gradient_evals;
      const double g = gradient(mu, row, std::span<const double>(set.solution.weights.data(),
                                                                 static_cast<std::size_t>(set.solution.weights.size())));
      if (g < std::sqrt(2.0 * set.tau / m)) continue;
      const double self = kernel_(item, item);
      ++counters_.kernel_evals;
      append(set, index, mu, item, row, self);
      ++accepted;
      ++solves;
    }

    if (accepted > 0) {
      ++counters_.accepted_elements;
    } else {
      ++counters_.rejected_elements;
      counters_.solves_on_rejected += solves;
    }
    counters_.max_solves_per_element = std::max(counters_.max_solves_per_element, solves);
    std::size_t tracked = best_ ? 1 : 0;
    for (const auto& [e, s] : sets_) tracked += s.size();
    counters_.peak_tracked = std::max(counters_.peak_tracked, tracked);
    return accepted;
  }

  // Best of the singleton {p} and all live candidate sets; ties favour the
  // singleton, then the smaller threshold.
  Solution finalize() {
    if (!best_) return Solution{};
    RestrictedQP single;
    single.support = {best_->index};
    single.mu = Eigen::VectorXd::Constant(1, best_->mu);
    single.K = Eigen::MatrixXd::Constant(1, 1, kernel_(best_->item, best_->item));
    ++counters_.kernel_evals;
    ++counters_.qp_solves;
    const QPSolution s = solve(single, cfg_.solver);
    Solution best = make_solution(single.support, s.weights, s.objective);

    for (const auto& [e, set] : sets_) {
      if (set.size() == 0) continue;
      if (set.solution.objective > best.objective) {
        best = make_solution(set.indices, set.solution.weights, set.solution.objective);
        best.threshold = set.tau;
      }
    }
    return best;
  }

 private:
  void update_ladder(std::size_t index, double mu, const Item& item) {
    const double clamped = std::max(mu, 0.0);
    if (!(clamped * clamped > rho_)) return;
    rho_ = clamped * clamped;
    best_ = Singleton{index, mu, item};

    const auto [lo, hi] = *window();
    sets_.erase(sets_.begin(), sets_.lower_bound(lo));
    const int first_new = sets_.empty() ? lo : std::max(lo, sets_.rbegin()->first + 1);
    for (int e = first_new; e <= hi; ++e) {
      CandidateSet<Item> set;
      set.exponent = e;
      set.tau = tau_of(e);
      set.solution.weights.resize(0);
      sets_.emplace(e, std::move(set));
    }
  }

  void append(CandidateSet<Item>& set, std::size_t index, double mu, const Item& item,
              const std::vector<double>& row, double self) {
    const auto k = static_cast<Eigen::Index>(set.size());
    set.indices.push_back(index);
    set.items.push_back(item);
    set.mu.conservativeResize(k + 1);
    set.mu[k] = mu;
    set.K.conservativeResize(k + 1, k + 1);
    for (Eigen::Index i = 0; i < k; ++i) {
      set.K(k, i) = row[static_cast<std::size_t>(i)];
      set.K(i, k) = row[static_cast<std::size_t>(i)];
    }
    set.K(k, k) = self;

    RestrictedQP qp;
    qp.mu = set.mu;
    qp.K = set.K;
    QPSolution start = set.solution;
    start.weights.conservativeResize(k + 1);
    start.weights[k] = 0.0;
    const double before = set.solution.objective;
    ++counters_.qp_solves;
    set.solution = solve_warm(qp, start, cfg_.solver);

    const double floor = set.tau / (self * static_cast<double>(cfg_.m));
    min_append_margin_ = std::min(min_append_margin_, set.solution.objective - before - floor);

    if (set.size() == cfg_.m) {
      saturations_.push_back(
          SaturationEvent{set.exponent, set.tau, set.solution.objective, set.K.diagonal().maxCoeff()});
    }
  }

  StreamConfig cfg_;
  KernelFn kernel_;
  double log_base_ = 0.0;
  double rho_ = 0.0;
  std::optional<Singleton> best_;
  std::map<int, CandidateSet<Item>> sets_;
  std::vector<SaturationEvent> saturations_;
  double min_append_margin_ = std::numeric_limits<double>::infinity();
  StreamCounters counters_;
};

}  // namespace protosel
