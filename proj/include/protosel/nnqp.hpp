#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protosel/errors.hpp"

namespace protosel {

// Non-negative quadratic program restricted to a support L:
//   maximize  l(w) = w'mu - 1/2 w'Kw   subject to  w >= 0, supp(w) in L.
struct RestrictedQP {
  std::vector<std::size_t> support;  // optional labels for the rows of mu/K
  Eigen::VectorXd mu;
  Eigen::MatrixXd K;

  Eigen::Index size() const { return mu.size(); }
};

struct QPSolution {
  Eigen::VectorXd weights;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double kkt_tol = 1e-8;
  double psd_tol = 1e-10;
  int max_iter = -1;  // < 0 means 10*|L|^2 + 1000
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, QPSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const QPSolution& best_iterate() const { return best_; }

 private:
  QPSolution best_;
};

// grad_j l(w) = mu_j - sum_i k(x_j, x_i) w_i, with k_row holding k(x_j, x_i)
// for every i in the support of w.
inline double gradient(double mu_j, std::span<const double> k_row, std::span<const double> w) {
  double acc = mu_j;
  for (std::size_t i = 0; i < w.size(); ++i) acc -= k_row[i] * w[i];
  return acc;
}

inline Eigen::VectorXd gradient(const RestrictedQP& qp, const Eigen::VectorXd& w) {
  return qp.mu - qp.K * w;
}

inline double objective(const RestrictedQP& qp, const Eigen::VectorXd& w) {
  return w.dot(qp.mu) - 0.5 * w.dot(qp.K * w);
}

// max over the support of |g_j| where w_j > 0 and max(g_j, 0) where w_j = 0.
inline double kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    r = std::max(r, w[j] > 0.0 ? std::abs(g[j]) : std::max(g[j], 0.0));
  }
  return r;
}

namespace detail {

inline void check_shape(const RestrictedQP& qp) {
  if (qp.K.rows() != qp.mu.size() || qp.K.cols() != qp.mu.size()) {
    throw InputError("restricted QP: K must be |L| x |L|");
  }
  if (!qp.support.empty() && static_cast<Eigen::Index>(qp.support.size()) != qp.mu.size()) {
    throw InputError("restricted QP: support size does not match mu");
  }
}

inline void check_psd(const Eigen::MatrixXd& K, double tol) {
  if (K.size() == 0) return;
  if (!K.isApprox(K.transpose(), 1e-12) && (K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw NumericalError("restricted QP: K is not symmetric");
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  const double scale = std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
  // info() is not consulted: Eigen flags exact-zero pivots of singular PSD
  // blocks (duplicate points) as numerical issues.
  if (!(ldlt.vectorD().minCoeff() >= -tol * scale)) {
    throw NumericalError("restricted QP: K is not positive semi-definite");
  }
}

// Solves K_PP z = mu_P with one step of iterative refinement.
inline Eigen::VectorXd solve_passive(const RestrictedQP& qp, const std::vector<Eigen::Index>& passive) {
  const auto p = static_cast<Eigen::Index>(passive.size());
  Eigen::MatrixXd Kp(p, p);
  Eigen::VectorXd mp(p);
  for (Eigen::Index a = 0; a < p; ++a) {
    mp[a] = qp.mu[passive[a]];
    for (Eigen::Index b = 0; b < p; ++b) Kp(a, b) = qp.K(passive[a], passive[b]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Kp);
  Eigen::VectorXd z = ldlt.solve(mp);
  z += ldlt.solve(mp - Kp * z);
  return z;
}

}  // namespace detail

// Primal active-set (Lawson-Hanson) ascent started from a feasible point.
// Terminates when the KKT residual drops to opts.kkt_tol.
inline QPSolution solve_warm(const RestrictedQP& qp, const QPSolution& start,
                             const SolverOptions& opts = {}) {
  detail::check_shape(qp);
  const Eigen::Index n = qp.size();
  if (start.weights.size() != n) {
    throw InputError("warm start has " + std::to_string(start.weights.size()) +
                     " weights for a support of size " + std::to_string(n));
  }
  detail::check_psd(qp.K, opts.psd_tol);

  const int max_iter = opts.max_iter >= 0 ? opts.max_iter : static_cast<int>(10 * n * n + 1000);

  QPSolution sol;
  sol.weights = start.weights.cwiseMax(0.0);
  Eigen::VectorXd g = gradient(qp, sol.weights);
  sol.kkt_residual = kkt_residual(sol.weights, g);
  sol.objective = objective(qp, sol.weights);
  if (n == 0 || sol.kkt_residual <= opts.kkt_tol) return sol;

  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) in_passive[j] = sol.weights[j] > 0.0;
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);

  auto passive_list = [&] {
    std::vector<Eigen::Index> p;
    for (Eigen::Index j = 0; j < n; ++j)
      if (in_passive[j]) p.push_back(j);
    return p;
  };

  int iter = 0;
  bool need_entry = false;
  // The first pass re-solves on the start's own support, so a warm start with
  // the right support but stale weights converges without any entering index.
  for (;;) {
    Eigen::Index entered = -1;
    if (need_entry) {
      double best = opts.kkt_tol;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!in_passive[j] && !blocked[j] && g[j] > best) {
          best = g[j];
          entered = j;
        }
      }
      if (entered < 0) break;
      in_passive[entered] = true;
    }
    need_entry = true;
    const double before = sol.objective;

    // Move toward the unconstrained optimum on the passive set, dropping
    // coordinates that reach zero on the way.
    for (;;) {
      if (++iter > max_iter) {
        sol.iterations = iter - 1;
        throw ConvergenceError("active-set solver exceeded " + std::to_string(max_iter) +
                                   " iterations (KKT residual " + std::to_string(sol.kkt_residual) + ")",
                               sol);
      }
      const auto passive = passive_list();
      if (passive.empty()) break;
      const Eigen::VectorXd z = detail::solve_passive(qp, passive);
      double alpha = 1.0;
      Eigen::Index blocking = -1;
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const double za = z[static_cast<Eigen::Index>(a)];
        if (za <= 0.0) {
          const double wi = sol.weights[passive[a]];
          const double step = wi - za > 0.0 ? wi / (wi - za) : 0.0;
          if (step < alpha || blocking < 0) {
            alpha = std::min(alpha, step);
            blocking = passive[a];
          }
        }
      }
      Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const Eigen::Index j = passive[a];
        const double za = z[static_cast<Eigen::Index>(a)];
        next[j] = blocking < 0 ? za : sol.weights[j] + alpha * (za - sol.weights[j]);
      }
      if (blocking < 0) {
        sol.weights = next;
        break;
      }
      next[blocking] = 0.0;
      for (Eigen::Index j : passive) {
        if (next[j] <= 0.0) {
          next[j] = 0.0;
          in_passive[j] = false;
        }
      }
      sol.weights = next;
    }

    g = gradient(qp, sol.weights);
    sol.objective = objective(qp, sol.weights);
    sol.kkt_residual = kkt_residual(sol.weights, g);
    if (sol.kkt_residual <= opts.kkt_tol) break;
    // An entering index that bought no ascent is numerically stuck; skip it
    // until the iterate moves again.
    if (sol.objective > before + 1e-14 * std::max(1.0, std::abs(before))) {
      std::fill(blocked.begin(), blocked.end(), false);
    } else if (entered >= 0) {
      blocked[entered] = true;
    }
  }

  sol.iterations = iter;
  if (sol.kkt_residual > opts.kkt_tol) {
    throw ConvergenceError("active-set solver stalled with KKT residual " +
                               std::to_string(sol.kkt_residual),
                           sol);
  }
  return sol;
}

inline QPSolution solve(const RestrictedQP& qp, const SolverOptions& opts = {}) {
  detail::check_shape(qp);
  QPSolution zero;
  zero.weights = Eigen::VectorXd::Zero(qp.size());
  return solve_warm(qp, zero, opts);
}

// Builds the restricted problem for an index subset of a full (mu, K) pair.
inline RestrictedQP restrict_to(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K,
                                std::span<const std::size_t> subset) {
  RestrictedQP qp;
  qp.support.assign(subset.begin(), subset.end());
  const auto k = static_cast<Eigen::Index>(subset.size());
  qp.mu.resize(k);
  qp.K.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    qp.mu[a] = mu[static_cast<Eigen::Index>(subset[a])];
    for (Eigen::Index b = 0; b < k; ++b) {
      qp.K(a, b) = K(static_cast<Eigen::Index>(subset[a]), static_cast<Eigen::Index>(subset[b]));
    }
  }
  return qp;
}

// f(L) for a subset of a full instance.
inline double set_value(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K,
                        std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  return solve(restrict_to(mu, K, subset)).objective;
}

}  // namespace protosel
