#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protosel/kernel.hpp"
#include "protosel/nnqp.hpp"
#include "protosel/oracle.hpp"
#include "protosel/protobasic.hpp"
#include "protosel/protostream.hpp"
#include "protosel/synthetic.hpp"

// Randomised numerical checks of the approximation bounds. Every check draws
// small Gaussian-kernel instances, computes the constants and optima by
// enumeration, and records the slack of each inequality (negative slack
// beyond the tolerance is a violation).
namespace protosel::verify {

inline constexpr double kTolerance = 1e-9;

struct CheckResult {
  explicit CheckResult(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;  // degenerate constants (c_k = 0) or undefined ratios
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> failing_seeds;
  std::vector<std::string> notes;
  double seconds = 0.0;

  bool passed() const { return violations == 0; }

  void record(double margin, std::uint64_t seed) {
    worst_margin = std::min(worst_margin, margin);
    if (margin < -kTolerance) {
      ++violations;
      if (failing_seeds.size() < 20) failing_seeds.push_back(seed);
    }
  }
};

struct VerifyConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 200;
  std::size_t n = 20;         // points per instance for the optimum checks
  std::size_t pair_n = 10;   // points per instance for the L/S draws
  std::size_t dim = 2;
  std::size_t m = 3;
  double epsilon = 0.4;
  std::size_t max_pair = 5;   // |L| + |S| upper limit
  std::size_t impossibility_k = 10;
};

struct VerifyReport {
  VerifyConfig config;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t salt, std::size_t t) {
  std::seed_seq seq{base, salt, static_cast<std::uint64_t>(t)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline synthetic::PointInstance cloud_instance(std::size_t n, std::size_t dim, std::uint64_t seed) {
  synthetic::Rng rng(seed);
  return synthetic::point_instance(synthetic::normal_cloud(n, dim, rng), seed);
}

// Runs ProtoBasic on an instance in row order; the item is the row number.
inline Solution run_protobasic(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K, std::size_t m) {
  ProtoBasic<std::size_t> pb(m);
  for (Eigen::Index j = 0; j < mu.size(); ++j) pb.offer(static_cast<std::size_t>(j), mu[j], static_cast<std::size_t>(j));
  return pb.finalize([&](std::size_t a, std::size_t b) {
    return K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  });
}

inline auto matrix_kernel(const Eigen::MatrixXd& K) {
  return [&K](std::size_t a, std::size_t b) { return K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)); };
}

// Positive part of the gradient at zeta^(L), restricted to S.
inline double positive_gradient_sq(const Eigen::VectorXd& mu, const Eigen::MatrixXd& K, const oracle::IndexSet& L,
                                   const oracle::IndexSet& S) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(mu.size());
  if (!L.empty()) {
    const auto sol = solve(restrict_to(mu, K, L));
    for (std::size_t i = 0; i < L.size(); ++i) full[static_cast<Eigen::Index>(L[i])] = sol.weights[static_cast<Eigen::Index>(i)];
  }
  double acc = 0.0;
  for (auto j : S) {
    const double g = mu[static_cast<Eigen::Index>(j)] - K.row(static_cast<Eigen::Index>(j)).dot(full);
    const double gp = std::max(g, 0.0);
    acc += gp * gp;
  }
  return acc;
}

// Random disjoint (L, S) with |S| >= 1 and |L| + |S| <= max_pair.
inline std::pair<oracle::IndexSet, oracle::IndexSet> draw_pair(std::size_t n, std::size_t max_pair, synthetic::Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t total = std::uniform_int_distribution<std::size_t>(1, std::min(max_pair, n))(rng);
  const std::size_t s = std::uniform_int_distribution<std::size_t>(1, total)(rng);
  oracle::IndexSet S(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
  oracle::IndexSet L(perm.begin() + static_cast<std::ptrdiff_t>(s), perm.begin() + static_cast<std::ptrdiff_t>(total));
  std::sort(S.begin(), S.end());
  std::sort(L.begin(), L.end());
  return {L, S};
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// f(ProtoBasic) >= (c_m / C~_m) f(L*).
inline CheckResult check_protobasic_ratio(const VerifyConfig& cfg) {
  Timer timer;
  CheckResult r{"protobasic_constant_factor"};
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 1, t);
    const auto inst = cloud_instance(cfg.n, cfg.dim, seed);
    const auto params = oracle::rsc_rsm_constants(inst.K, cfg.m);
    const auto opt = oracle::exhaustive_optimum(inst.mu, inst.K, cfg.m);
    const auto pb = run_protobasic(inst.mu, inst.K, cfg.m);
    ++r.trials;
    if (params.degenerate(cfg.m)) ++r.skipped;
    r.record(pb.objective - params.kappa(cfg.m) * opt.value, seed);
  }
  r.seconds = timer.seconds();
  return r;
}

// f({p}) ratio bound with r_m, R_m the extreme gamma_{empty,Z} over |Z| = m.
inline CheckResult check_singleton_ratio(const VerifyConfig& cfg) {
  Timer timer;
  CheckResult r{"protobasic_submodularity_factor"};
  const std::size_t n = cfg.pair_n;
  std::size_t order_mismatch = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 2, t);
    const auto inst = cloud_instance(n, cfg.dim, seed);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool undefined = false;
    oracle::for_each_combination(n, cfg.m, [&](const oracle::IndexSet& Z) {
      const auto g = oracle::submodularity_ratio(inst.mu, inst.K, {}, Z);
      if (!g.gamma) {
        undefined = true;
        return;
      }
      lo = std::min(lo, *g.gamma);
      hi = std::max(hi, *g.gamma);
    });
    ++r.trials;
    if (undefined) {
      ++r.skipped;
      continue;
    }
    const auto opt = oracle::exhaustive_optimum(inst.mu, inst.K, cfg.m);
    const auto pb = run_protobasic(inst.mu, inst.K, cfg.m);

    // Top-mu and top-singleton-value sets coincide under unit diagonal.
    std::vector<std::size_t> by_single(n);
    std::iota(by_single.begin(), by_single.end(), std::size_t{0});
    std::stable_sort(by_single.begin(), by_single.end(), [&](std::size_t a, std::size_t b) {
      return set_value(inst.mu, inst.K, oracle::IndexSet{a}) > set_value(inst.mu, inst.K, oracle::IndexSet{b});
    });
    by_single.resize(cfg.m);
    std::sort(by_single.begin(), by_single.end());
    if (by_single != pb.indices) ++order_mismatch;

    if (opt.subset.size() < cfg.m) {
      r.notes.push_back("seed " + std::to_string(seed) + ": optimum smaller than m, gamma of L* used directly");
      const auto g = oracle::submodularity_ratio(inst.mu, inst.K, {}, opt.subset);
      if (g.gamma) lo = std::min(lo, *g.gamma);
    }
    r.record(pb.objective - (lo / hi) * opt.value, seed);
  }
  if (order_mismatch > 0) {
    r.violations += order_mismatch;
    r.notes.push_back(std::to_string(order_mismatch) + " trials where top-mu differs from top singleton value");
  }
  r.seconds = timer.seconds();
  return r;
}

// ||g_S+||^2 / (2 C~_|S|) <= f(L+S) - f(L) <= ||g_S+||^2 / (2 c_{|L|+|S|}).
inline CheckResult check_gain_sandwich(const VerifyConfig& cfg, const std::vector<DataPoint>* fixed = nullptr,
                                       const char* name = "gain_sandwich") {
  Timer timer;
  CheckResult r{name};
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 3, t);
    const auto inst = fixed ? synthetic::point_instance(*fixed, seed) : cloud_instance(cfg.pair_n, cfg.dim, seed);
    const auto n = static_cast<std::size_t>(inst.mu.size());
    const auto params = oracle::rsc_rsm_constants(inst.K, std::min(cfg.max_pair, n));
    synthetic::Rng rng(seed);
    const auto [L, S] = draw_pair(n, cfg.max_pair, rng);
    const double gain = set_value(inst.mu, inst.K, oracle::set_union(L, S)) - set_value(inst.mu, inst.K, L);
    const double gsq = positive_gradient_sq(inst.mu, inst.K, L, S);
    ++r.trials;
    r.record(gain - gsq / (2.0 * params.C_at(S.size())), seed);
    const std::size_t k = L.size() + S.size();
    if (params.degenerate(k)) {
      ++r.skipped;
      continue;
    }
    r.record(gsq / (2.0 * params.c_at(k)) - gain, seed);
  }
  r.seconds = timer.seconds();
  return r;
}

// c_{|L|+|S|} / C~_1 <= gamma_{L,S} <= C~_|S| / c_{|L|+1}.
inline CheckResult check_ratio_bounds(const VerifyConfig& cfg, const std::vector<DataPoint>* fixed = nullptr,
                                      const char* name = "submodularity_ratio_bounds") {
  Timer timer;
  CheckResult r{name};
  std::size_t undefined = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 4, t);
    const auto inst = fixed ? synthetic::point_instance(*fixed, seed) : cloud_instance(cfg.pair_n, cfg.dim, seed);
    const auto n = static_cast<std::size_t>(inst.mu.size());
    const auto params = oracle::rsc_rsm_constants(inst.K, std::min(cfg.max_pair, n));
    synthetic::Rng rng(seed);
    const auto [L, S] = draw_pair(n, cfg.max_pair, rng);
    const auto g = oracle::submodularity_ratio(inst.mu, inst.K, L, S);
    ++r.trials;
    if (!g.gamma) {
      ++undefined;
      ++r.skipped;
      continue;
    }
    r.record(*g.gamma - params.c_at(L.size() + S.size()) / params.C_at(1), seed);
    if (params.degenerate(L.size() + 1)) {
      ++r.skipped;
      continue;
    }
    r.record(params.C_at(S.size()) / params.c_at(L.size() + 1) - *g.gamma, seed);
  }
  if (undefined > 0) r.notes.push_back(std::to_string(undefined) + " draws with f(L+S) = f(L), ratio undefined");
  r.seconds = timer.seconds();
  return r;
}

// Any rung that fills up holds f(L_tau) >= tau / C~_1, and every append gains
// at least tau / (k_jj m).
inline CheckResult check_saturated_sets(const VerifyConfig& cfg) {
  Timer timer;
  CheckResult r{"saturated_threshold_sets"};
  std::size_t saturated = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 5, t);
    const auto inst = cloud_instance(cfg.n, cfg.dim, seed);
    const double C1 = inst.K.diagonal().maxCoeff();
    ProtoStream<std::size_t, decltype(matrix_kernel(inst.K))> ps(StreamConfig{cfg.m, cfg.epsilon, {}},
                                                                  matrix_kernel(inst.K));
    for (Eigen::Index j = 0; j < inst.mu.size(); ++j)
      ps.offer(static_cast<std::size_t>(j), inst.mu[j], static_cast<std::size_t>(j));
    ++r.trials;
    for (const auto& ev : ps.saturations()) {
      ++saturated;
      r.record(ev.objective - ev.tau / C1, seed);
    }
    if (std::isfinite(ps.min_append_margin())) r.record(ps.min_append_margin(), seed);
  }
  r.notes.push_back(std::to_string(saturated) + " saturated sets examined");
  r.seconds = timer.seconds();
  return r;
}

// f* <= rho m / (2 c_m) and c_m rho / (2 C~_1) <= c_m f({p}) <= c_m f*, plus
// the singleton guarantee when c_m / C~_1 <= 1/m.
inline CheckResult check_range_bounds(const VerifyConfig& cfg) {
  Timer timer;
  CheckResult r{"threshold_range_bounds"};
  std::size_t small_m = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto seed = trial_seed(cfg.seed, 1, t);  // same instances as the constant-factor check
    const auto inst = cloud_instance(cfg.n, cfg.dim, seed);
    const auto params = oracle::rsc_rsm_constants(inst.K, cfg.m);
    const auto opt = oracle::exhaustive_optimum(inst.mu, inst.K, cfg.m);
    Eigen::Index p = 0;
    inst.mu.maxCoeff(&p);
    const double rho = std::pow(std::max(inst.mu[p], 0.0), 2);
    const double fp = set_value(inst.mu, inst.K, oracle::IndexSet{static_cast<std::size_t>(p)});
    const double cm = params.c_at(cfg.m);
    const double C1 = params.C_at(1);
    const double m = static_cast<double>(cfg.m);
    ++r.trials;
    r.record(cm * fp - cm * rho / (2.0 * C1), seed);
    r.record(cm * opt.value - cm * fp, seed);
    if (params.degenerate(cfg.m)) {
      ++r.skipped;
      continue;
    }
    r.record(rho * m / (2.0 * cm) - opt.value, seed);
    if (cm / C1 <= 1.0 / m) {
      ++small_m;
      r.record(fp - (cm * cm) / (C1 * C1) * opt.value, seed);
    }
  }
  r.notes.push_back(std::to_string(small_m) + " trials in the c_m / C~_1 <= 1/m regime");
  r.seconds = timer.seconds();
  return r;
}

inline CheckResult check_impossibility(const VerifyConfig& cfg) {
  Timer timer;
  CheckResult r{"impossibility_gamma"};
  for (std::size_t k = 1; k <= cfg.impossibility_k; ++k) {
    const double g = oracle::impossibility_gamma(k);
    ++r.trials;
    const double margin = g == static_cast<double>(k) ? 0.0 : -std::abs(g - static_cast<double>(k));
    r.worst_margin = std::min(r.worst_margin, margin);
    if (g != static_cast<double>(k)) {
      ++r.violations;
      r.failing_seeds.push_back(k);
    }
  }
  r.seconds = timer.seconds();
  return r;
}

// A point set with exact duplicates: every curvature constant from order 2
// up is zero, so the upper bounds are skipped rather than failed.
inline std::vector<DataPoint> duplicate_points(std::uint64_t seed) {
  synthetic::Rng rng(seed);
  auto pts = synthetic::normal_cloud(4, 2, rng);
  const auto copy = pts;
  for (const auto& p : copy) pts.push_back(p);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].stream_index = i;
  return pts;
}

inline VerifyReport run_all(const VerifyConfig& cfg) {
  Timer timer;
  VerifyReport rep;
  rep.config = cfg;
  rep.checks.push_back(check_protobasic_ratio(cfg));
  rep.checks.push_back(check_singleton_ratio(cfg));
  rep.checks.push_back(check_gain_sandwich(cfg));
  rep.checks.push_back(check_ratio_bounds(cfg));
  rep.checks.push_back(check_saturated_sets(cfg));
  rep.checks.push_back(check_range_bounds(cfg));
  rep.checks.push_back(check_impossibility(cfg));

  VerifyConfig dup = cfg;
  dup.trials = std::max<std::size_t>(1, cfg.trials / 10);
  const auto pts = duplicate_points(cfg.seed);
  rep.checks.push_back(check_gain_sandwich(dup, &pts, "gain_sandwich_duplicates"));
  rep.checks.push_back(check_ratio_bounds(dup, &pts, "submodularity_ratio_bounds_duplicates"));
  rep.seconds = timer.seconds();
  return rep;
}

}  // namespace protosel::verify
