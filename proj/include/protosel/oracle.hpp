#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protosel/errors.hpp"
#include "protosel/nnqp.hpp"
#include "protosel/solution.hpp"

namespace protosel::oracle {

inline constexpr std::size_t kMaxEnumerationPoints = 25;
inline constexpr std::size_t kMaxOptimumCardinality = 4;
inline constexpr std::size_t kMaxCurvatureOrder = 6;

using IndexSet = std::vector<std::size_t>;

// Calls visit(subset) for every subset of {0..n-1} with 1 <= |subset| <= max_size,
// in lexicographic order of the sorted index sequences.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t max_size, Visit&& visit) {
  IndexSet current;
  std::function<void(std::size_t)> rec = [&](std::size_t next) {
    for (std::size_t i = next; i < n; ++i) {
      current.push_back(i);
      visit(static_cast<const IndexSet&>(current));
      if (current.size() < max_size) rec(i + 1);
      current.pop_back();
    }
  };
  rec(0);
}

// Every subset of exactly `size` elements, lexicographic.
template <class Visit>
void for_each_combination(std::size_t n, std::size_t size, Visit&& visit) {
  if (size == 0 || size > n) return;
  IndexSet c(size);
  for (std::size_t i = 0; i < size; ++i) c[i] = i;
  for (;;) {
    visit(static_cast<const IndexSet&>(c));
    std::size_t i = size;
    while (i > 0 && c[i - 1] == n - size + (i - 1)) --i;
    if (i == 0) return;
    ++c[i - 1];
    for (std::size_t j = i; j < size; ++j) c[j] = c[j - 1] + 1;
  }
}

struct Optimum {
  IndexSet subset;
  double value = 0.0;
};

inline void check_instance(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K) {
  if (K.rows() != mu.size() || K.cols() != mu.size()) throw InputError("mu and K sizes disagree");
}

// Best subset of size <= m by brute force. The first subset (lexicographic)
// attaining the maximum wins. `evaluations`, when given, counts QP solves.
inline Optimum exhaustive_optimum(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K, std::size_t m,
                                  std::size_t* evaluations = nullptr) {
  check_instance(mu, K);
  const auto n = static_cast<std::size_t>(mu.size());
  if (n > kMaxEnumerationPoints || m > kMaxOptimumCardinality) {
    throw InputError("exhaustive optimum limited to n <= 25 and m <= 4 (got n = " + std::to_string(n) +
                     ", m = " + std::to_string(m) + ")");
  }
  Optimum best;
  for_each_subset(n, m, [&](const IndexSet& s) {
    if (evaluations) ++*evaluations;
    const double v = set_value(mu, K, s);
    if (v > best.value) {
      best.value = v;
      best.subset = s;
    }
  });
  return best;
}

// Forward selection: each round adds the element with the largest f(L + j).
// Stops early once no element strictly increases f.
inline Solution batch_greedy(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K, std::size_t m,
                             std::size_t* evaluations = nullptr) {
  check_instance(mu, K);
  const auto n = static_cast<std::size_t>(mu.size());
  IndexSet chosen;
  std::vector<bool> used(n, false);
  double current = 0.0;
  for (std::size_t round = 0; round < m && round < n; ++round) {
    std::optional<std::size_t> pick;
    double best = current;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      IndexSet trial = chosen;
      trial.push_back(j);
      if (evaluations) ++*evaluations;
      const double v = set_value(mu, K, trial);
      if (v > best) {
        best = v;
        pick = j;
      }
    }
    if (!pick) break;
    used[*pick] = true;
    chosen.push_back(*pick);
    current = best;
  }
  if (chosen.empty()) return Solution{};
  if (evaluations) ++*evaluations;
  const QPSolution sol = solve(restrict_to(mu, K, chosen));
  return make_solution(chosen, sol.weights, sol.objective);
}

// Curvature constants of l(w) = w'mu - 1/2 w'Kw over coordinate-sparse
// directions: c_k is the smallest eigenvalue over all k x k principal
// submatrices of K, C~_k the largest.
struct RscRsmParams {
  std::vector<double> c;        // c[k], k = 1..k_max (c[0] unused)
  std::vector<double> C_tilde;  // C~[k]

  std::size_t k_max() const { return c.empty() ? 0 : c.size() - 1; }
  double c_at(std::size_t k) const { return c.at(k); }
  double C_at(std::size_t k) const { return C_tilde.at(k); }
  double kappa(std::size_t m) const { return C_at(m) > 0.0 ? c_at(m) / C_at(m) : 0.0; }
  bool degenerate(std::size_t k) const { return c_at(k) <= 0.0; }
};

inline RscRsmParams rsc_rsm_constants(const Eigen::MatrixXd& K, std::size_t k_max) {
  const auto n = static_cast<std::size_t>(K.rows());
  if (K.cols() != K.rows()) throw InputError("K must be square");
  if (n > kMaxEnumerationPoints || k_max > kMaxCurvatureOrder) {
    throw InputError("curvature constants limited to n <= 25 and k <= 6");
  }
  k_max = std::min(k_max, n);
  RscRsmParams p;
  p.c.assign(k_max + 1, 0.0);
  p.C_tilde.assign(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for_each_combination(n, k, [&](const IndexSet& s) {
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
          sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              K(static_cast<Eigen::Index>(s[a]), static_cast<Eigen::Index>(s[b]));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues()[0]);
      hi = std::max(hi, es.eigenvalues()[static_cast<Eigen::Index>(k) - 1]);
    });
    // Round-off on singular blocks is reported as exact zero.
    p.c[k] = lo <= 1e-12 * std::max(1.0, hi) ? 0.0 : lo;
    p.C_tilde[k] = hi;
  }
  return p;
}

struct SubmodularityRatio {
  IndexSet L;
  IndexSet S;
  std::optional<double> gamma;  // empty when f(L + S) - f(L) is not positive
  bool degenerate() const { return !gamma.has_value(); }
};

using SetFunction = std::function<double(const IndexSet&)>;

inline IndexSet set_union(IndexSet a, const IndexSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

// gamma_{L,S} = sum_{i in S} (f(L + i) - f(L)) / (f(L + S) - f(L)).
inline SubmodularityRatio submodularity_ratio(const SetFunction& f, const IndexSet& L, const IndexSet& S,
                                              double min_denominator = 1e-12) {
  for (auto s : S) {
    if (std::find(L.begin(), L.end(), s) != L.end()) throw InputError("L and S must be disjoint");
  }
  SubmodularityRatio r{L, S, std::nullopt};
  const double base = f(L);
  const double joint = f(set_union(L, S)) - base;
  if (!(joint > min_denominator)) return r;
  double singles = 0.0;
  for (auto s : S) singles += f(set_union(L, {s})) - base;
  r.gamma = singles / joint;
  return r;
}

inline SubmodularityRatio submodularity_ratio(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K,
                                              const IndexSet& L, const IndexSet& S) {
  check_instance(mu, K);
  return submodularity_ratio([&](const IndexSet& s) { return set_value(mu, K, s); }, L, S);
}

// f_k(S) = min(2 u(S) + 1, 2 v(S)) over ground set U = {0..k-1}, V = {k..2k-1},
// with u, v counting members of U and V. Returns gamma_{empty, V}.
inline double impossibility_gamma(std::size_t k) {
  if (k == 0) throw InputError("impossibility example needs k >= 1");
  const SetFunction fk = [k](const IndexSet& s) {
    std::size_t u = 0, v = 0;
    for (auto e : s) (e < k ? u : v) += 1;
    return std::min(2.0 * static_cast<double>(u) + 1.0, 2.0 * static_cast<double>(v));
  };
  IndexSet V;
  for (std::size_t i = k; i < 2 * k; ++i) V.push_back(i);
  const auto r = submodularity_ratio(fk, {}, V);
  return r.gamma.value();
}

}  // namespace protosel::oracle
