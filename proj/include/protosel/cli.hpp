#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "protosel/dataset.hpp"
#include "protosel/errors.hpp"
#include "protosel/eval.hpp"
#include "protosel/kernel.hpp"
#include "protosel/nnqp.hpp"
#include "protosel/oracle.hpp"
#include "protosel/protobasic.hpp"
#include "protosel/protostream.hpp"
#include "protosel/verify.hpp"

namespace protosel::cli {

using Json = nlohmann::ordered_json;

enum class Algorithm { protobasic, protostream, greedy, exhaustive };

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "protobasic") return Algorithm::protobasic;
  if (s == "protostream") return Algorithm::protostream;
  if (s == "greedy") return Algorithm::greedy;
  if (s == "exhaustive") return Algorithm::exhaustive;
  throw InputError("unknown algorithm '" + s + "' (protobasic, protostream, greedy, exhaustive)");
}

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::protobasic: return "protobasic";
    case Algorithm::protostream: return "protostream";
    case Algorithm::greedy: return "greedy";
    case Algorithm::exhaustive: return "exhaustive";
  }
  return "?";
}

struct MuMode {
  bool reservoir = false;
  std::size_t capacity = 0;
};

// "exact" or "reservoir:R".
inline MuMode parse_mu_mode(const std::string& s) {
  if (s == "exact") return {};
  const std::string prefix = "reservoir:";
  if (s.rfind(prefix, 0) == 0) {
    const auto v = detail::parse_double(s.substr(prefix.size()));
    if (!v || *v < 1 || *v != std::floor(*v)) throw InputError("reservoir capacity must be a positive integer: " + s);
    return {true, static_cast<std::size_t>(*v)};
  }
  throw InputError("mu mode must be 'exact' or 'reservoir:R', got '" + s + "'");
}

// nullopt selects the median heuristic.
inline std::optional<double> parse_bandwidth(const std::string& s) {
  if (s == "median") return std::nullopt;
  const auto v = detail::parse_double(s);
  if (!v || !(*v > 0.0) || !std::isfinite(*v)) throw InputError("bandwidth must be a positive number or 'median'");
  return *v;
}

struct RunConfig {
  Algorithm algorithm = Algorithm::protostream;
  std::size_t m = 1;
  double epsilon = 0.4;
  std::optional<double> bandwidth;
  MuMode mu_mode;
  std::string data_file;
  std::optional<std::string> target_file;
  bool labels = false;
  std::optional<std::uint64_t> shuffle_seed;
  std::uint64_t seed = 0;  // median-heuristic subsample, reservoir, k-means
  std::string output;

  std::optional<Algorithm> compare;
  std::optional<std::string> test_file;
  std::optional<int> target_label;
  std::optional<std::size_t> clusters;
  bool check = false;  // bound check against the exhaustive oracle (small inputs only)
};

inline void validate(const RunConfig& c) {
  if (c.m == 0) throw InputError("--m must be at least 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw InputError("--epsilon must lie in (0, 1)");
  if (c.target_file && c.mu_mode.reservoir) throw InputError("--target needs --mu-mode exact");
  if (c.clusters && *c.clusters == 0) throw InputError("--clusters must be at least 1");
}

struct RunOutcome {
  Json report;
  int exit_code = 0;
};

namespace detail_cli {

struct Selection {
  Solution solution;
  StreamCounters counters;
  std::size_t objective_evals = 0;
  std::size_t live_sets = 0;
  std::vector<SaturationEvent> saturations;
};

inline Json counters_json(const Selection& s) {
  return Json{{"elements", s.counters.elements},
              {"gradient_evals", s.counters.gradient_evals},
              {"kernel_evals", s.counters.kernel_evals},
              {"objective_evals", s.objective_evals},
              {"accepted_elements", s.counters.accepted_elements},
              {"rejected_elements", s.counters.rejected_elements},
              {"objective_evals_on_rejected", s.counters.solves_on_rejected},
              {"max_objective_evals_per_element", s.counters.max_solves_per_element},
              {"peak_tracked", s.counters.peak_tracked}};
}

// Runs one algorithm over the stream. `mu` is indexed by stream position.
inline Selection select(Algorithm algo, const RunConfig& cfg, const std::vector<DataPoint>& stream,
                        const std::vector<double>& mu, const KernelConfig& kcfg) {
  Selection out;
  const GaussianKernel kernel{kcfg};
  switch (algo) {
    case Algorithm::protobasic: {
      ProtoBasic<DataPoint> pb(cfg.m);
      for (std::size_t i = 0; i < stream.size(); ++i) pb.offer(stream[i].stream_index, mu[i], stream[i]);
      out.solution = pb.finalize(kernel);
      out.counters = pb.counters();
      out.objective_evals = out.counters.qp_solves;
      return out;
    }
    case Algorithm::protostream: {
      ProtoStream<DataPoint, GaussianKernel> ps(StreamConfig{cfg.m, cfg.epsilon, {}}, kernel);
      for (std::size_t i = 0; i < stream.size(); ++i) ps.offer(stream[i].stream_index, mu[i], stream[i]);
      out.solution = ps.finalize();
      out.counters = ps.counters();
      out.objective_evals = out.counters.qp_solves;
      out.live_sets = ps.sets().size();
      out.saturations = ps.saturations();
      return out;
    }
    case Algorithm::greedy:
    case Algorithm::exhaustive: {
      if (algo == Algorithm::exhaustive &&
          (stream.size() > oracle::kMaxEnumerationPoints || cfg.m > oracle::kMaxOptimumCardinality)) {
        throw InputError("exhaustive search needs n <= 25 and m <= 4");
      }
      const Eigen::MatrixXd K = kernel_matrix(stream, kcfg);
      const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
      Solution local;
      if (algo == Algorithm::greedy) {
        local = oracle::batch_greedy(v, K, cfg.m, &out.objective_evals);
      } else {
        const auto opt = oracle::exhaustive_optimum(v, K, cfg.m, &out.objective_evals);
        if (!opt.subset.empty()) {
          const auto sol = solve(restrict_to(v, K, opt.subset));
          local = make_solution(opt.subset, sol.weights, sol.objective);
        }
      }
      std::vector<std::size_t> ids;
      for (auto pos : local.indices) ids.push_back(stream[pos].stream_index);
      out.solution = make_solution(ids, Eigen::Map<const Eigen::VectorXd>(local.weights.data(),
                                                                          static_cast<Eigen::Index>(local.weights.size())),
                                   local.objective);
      out.counters.elements = stream.size();
      out.counters.kernel_evals = stream.size() * stream.size();
      out.counters.qp_solves = out.objective_evals;
      out.counters.peak_tracked = stream.size();
      return out;
    }
  }
  return out;
}

inline std::vector<DataPoint> selected_points(const Solution& s, const std::vector<DataPoint>& rows) {
  std::vector<DataPoint> out;
  for (auto idx : s.indices) out.push_back(rows.at(idx));
  return out;
}

inline std::filesystem::path sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension(suffix);
  return p;
}

}  // namespace detail_cli

// Single pass over the data file in row order (or a seeded permutation of it).
// Row numbers in the report always refer to the original file order.
inline RunOutcome run(const RunConfig& cfg) {
  using namespace detail_cli;
  const auto t0 = std::chrono::steady_clock::now();
  validate(cfg);

  Json config{{"algorithm", to_string(cfg.algorithm)},
              {"m", cfg.m},
              {"epsilon", cfg.epsilon},
              {"bandwidth", cfg.bandwidth ? Json(*cfg.bandwidth) : Json("median")},
              {"mu_mode", cfg.mu_mode.reservoir ? "reservoir:" + std::to_string(cfg.mu_mode.capacity) : "exact"},
              {"data", cfg.data_file},
              {"target", cfg.target_file ? Json(*cfg.target_file) : Json(nullptr)},
              {"labels", cfg.labels},
              {"shuffle", cfg.shuffle_seed ? Json(*cfg.shuffle_seed) : Json(nullptr)},
              {"seed", cfg.seed}};
  if (cfg.compare) config["compare"] = to_string(*cfg.compare);
  if (cfg.test_file) config["test"] = *cfg.test_file;
  if (cfg.target_label) config["target_label"] = *cfg.target_label;
  if (cfg.clusters) config["clusters"] = *cfg.clusters;

  RunOutcome outcome;
  Json& rep = outcome.report;
  rep["config"] = config;

  const Dataset data = read_csv_file(cfg.data_file, cfg.labels);
  if (data.points.empty()) throw InputError(cfg.data_file + ": no data rows");
  const auto& rows = data.points;

  std::vector<DataPoint> stream = rows;
  if (cfg.shuffle_seed) {
    std::mt19937_64 rng(*cfg.shuffle_seed);
    std::shuffle(stream.begin(), stream.end(), rng);
  }

  KernelConfig kcfg;
  bool degenerate_bandwidth = false;
  if (cfg.bandwidth) {
    kcfg.bandwidth = *cfg.bandwidth;
  } else if (rows.size() >= 2) {
    const auto bw = median_heuristic(rows, cfg.seed);
    kcfg.bandwidth = bw.bandwidth;
    degenerate_bandwidth = bw.degenerate;
  }

  std::optional<Dataset> target;
  if (cfg.target_file) {
    target = read_csv_file(*cfg.target_file, false);
    if (target->points.empty()) throw InputError(*cfg.target_file + ": no data rows");
    if (target->dim() != data.dim()) throw InputError("target dimension differs from data dimension");
  }

  // mu by stream position. Reservoir mode freezes each value at offer time.
  std::vector<double> mu(stream.size());
  if (cfg.mu_mode.reservoir) {
    auto est = MeanEstimate::reservoir_mode(cfg.mu_mode.capacity, cfg.seed);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      update_streaming_mean(est, stream[i], kcfg);
      mu[i] = est.at(stream[i].stream_index);
      est.untrack(stream[i].stream_index);
    }
  } else {
    const auto est = target ? target_mean(target->points, rows, kcfg) : mean_vector(rows, rows, kcfg);
    for (std::size_t i = 0; i < stream.size(); ++i) mu[i] = est.at(stream[i].stream_index);
  }

  rep["n"] = rows.size();
  rep["dim"] = data.dim();
  rep["bandwidth"] = kcfg.bandwidth;
  rep["bandwidth_degenerate"] = degenerate_bandwidth;

  Selection main_sel;
  try {
    main_sel = select(cfg.algorithm, cfg, stream, mu, kcfg);
  } catch (const ConvergenceError& e) {
    rep["status"] = "solver_not_converged";
    rep["error"] = e.what();
    rep["partial_objective"] = e.best_iterate().objective;
    outcome.exit_code = 3;
    return outcome;
  }
  const Solution& sol = main_sel.solution;
  rep["status"] = "ok";
  rep["selected"] = sol.indices;
  rep["weights"] = sol.weights;
  rep["objective"] = sol.objective;
  rep["threshold"] = sol.threshold ? Json(*sol.threshold) : Json(nullptr);
  rep["counters"] = counters_json(main_sel);
  if (cfg.algorithm == Algorithm::protostream) {
    rep["live_thresholds"] = main_sel.live_sets;
    rep["saturated_sets"] = main_sel.saturations.size();
  }

  // Evaluation.
  Json ev = Json::object();
  const auto chosen = selected_points(sol, rows);
  if (data.labeled && !chosen.empty()) {
    const auto dist = eval::label_distribution(chosen);
    Json hist = Json::object();
    for (const auto& [label, count] : dist.histogram) hist[std::to_string(label)] = count;
    ev["label_histogram"] = hist;
    ev["label_entropy"] = dist.entropy;

    std::optional<int> target_label = cfg.target_label;
    if (!target_label && target && target->labeled) {
      const auto tl = eval::label_distribution(target->points);
      if (tl.histogram.size() == 1) target_label = tl.histogram.begin()->first;
    }
    if (target_label) ev["target_match_rate"] = eval::target_match_rate(chosen, *target_label);

    if (cfg.test_file) {
      const Dataset test = read_csv_file(*cfg.test_file, true);
      std::vector<eval::WeightedPrototype> protos;
      for (std::size_t i = 0; i < chosen.size(); ++i) protos.push_back({chosen[i], sol.weights[i]});
      ev["accuracy"] = eval::one_nn_accuracy(protos, test.points, cfg.m);
    }

    std::ofstream csv(sibling(cfg.output, ".labels.csv"));
    csv << "label,count\n";
    for (const auto& [label, count] : dist.histogram) csv << label << "," << count << "\n";
  } else if (cfg.target_label || cfg.test_file) {
    throw InputError("label-based evaluation needs a labeled data file (--labels)");
  }
  if (cfg.clusters) {
    const auto cov = eval::cluster_coverage(chosen, rows, *cfg.clusters, cfg.seed);
    ev["cluster_histogram"] = cov;
    ev["cluster_seed"] = cfg.seed;
    std::ofstream csv(sibling(cfg.output, ".clusters.csv"));
    csv << "cluster,fraction\n";
    for (std::size_t c = 0; c < cov.size(); ++c) csv << c << "," << cov[c] << "\n";
  }
  rep["eval"] = ev;

  if (cfg.compare) {
    const auto other = select(*cfg.compare, cfg, stream, mu, kcfg);
    rep["comparison"] = Json{{"algorithm", to_string(*cfg.compare)},
                             {"selected", other.solution.indices},
                             {"objective", other.solution.objective},
                             {"ratio", other.solution.objective > 0.0 ? Json(sol.objective / other.solution.objective)
                                                                      : Json(nullptr)}};
  }

  if (cfg.check) {
    if (rows.size() > oracle::kMaxEnumerationPoints || cfg.m > oracle::kMaxOptimumCardinality) {
      throw InputError("--check needs n <= 25 and m <= 4");
    }
    const Eigen::MatrixXd K = kernel_matrix(rows, kcfg);
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < stream.size(); ++i) v[static_cast<Eigen::Index>(stream[i].stream_index)] = mu[i];
    const auto opt = oracle::exhaustive_optimum(v, K, cfg.m);
    const auto params = oracle::rsc_rsm_constants(K, cfg.m);
    Json chk{{"optimum", opt.value},
             {"optimum_set", opt.subset},
             {"c_m", params.c_at(cfg.m)},
             {"C_m", params.C_at(cfg.m)},
             {"C_1", params.C_at(1)}};
    if (cfg.algorithm == Algorithm::protobasic) {
      const double margin = sol.objective - params.kappa(cfg.m) * opt.value;
      chk["bound"] = "f >= (c_m / C_m) f*";
      chk["margin"] = margin;
      chk["pass"] = margin >= -verify::kTolerance;
    } else if (cfg.algorithm == Algorithm::protostream) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& s : main_sel.saturations) worst = std::min(worst, s.objective - s.tau / params.C_at(1));
      chk["bound"] = "f(L_tau) >= tau / C_1 for full sets";
      chk["margin"] = std::isfinite(worst) ? Json(worst) : Json(nullptr);
      chk["pass"] = !(worst < -verify::kTolerance);
    } else {
      const double margin = opt.value - sol.objective;
      chk["bound"] = "f <= f*";
      chk["margin"] = margin;
      chk["pass"] = margin >= -verify::kTolerance;
    }
    if (!chk["pass"].get<bool>()) outcome.exit_code = 2;
    rep["check"] = chk;
  }

  rep["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

inline Json to_json(const verify::CheckResult& c) {
  return Json{{"name", c.name},
              {"passed", c.passed()},
              {"trials", c.trials},
              {"violations", c.violations},
              {"skipped", c.skipped},
              {"worst_margin", std::isfinite(c.worst_margin) ? Json(c.worst_margin) : Json(nullptr)},
              {"failing_seeds", c.failing_seeds},
              {"notes", c.notes},
              {"seconds", c.seconds}};
}

inline Json to_json(const verify::VerifyReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return Json{{"config",
               {{"seed", r.config.seed},
                {"trials", r.config.trials},
                {"n", r.config.n},
                {"pair_n", r.config.pair_n},
                {"dim", r.config.dim},
                {"m", r.config.m},
                {"epsilon", r.config.epsilon},
                {"max_pair", r.config.max_pair}}},
              {"passed", r.passed()},
              {"checks", checks},
              {"wall_time_seconds", r.seconds}};
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace protosel::cli
