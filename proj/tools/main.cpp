#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "protosel/cli.hpp"

namespace {

// Exit codes: 0 success, 1 input error, 2 verification failure, 3 numerical failure.
int run_command(const protosel::cli::RunConfig& cfg) {
  const auto outcome = protosel::cli::run(cfg);
  protosel::cli::write_json(cfg.output, outcome.report);
  if (outcome.exit_code == 3) std::cerr << "error: " << outcome.report.value("error", "solver failure") << "\n";
  return outcome.exit_code;
}

int verify_command(const protosel::verify::VerifyConfig& cfg, const std::string& out) {
  const auto report = protosel::verify::run_all(cfg);
  protosel::cli::write_json(out, protosel::cli::to_json(report));
  for (const auto& c : report.checks) {
    std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << "  trials=" << c.trials
              << " violations=" << c.violations << " skipped=" << c.skipped << " worst_margin=" << c.worst_margin
              << "\n";
  }
  return report.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming prototype selection with non-negative weights"};
  app.require_subcommand(1);

  protosel::cli::RunConfig run_cfg;
  std::string algo = "protostream", bandwidth = "median", mu_mode = "exact", compare;
  std::uint64_t shuffle = 0;
  auto* run = app.add_subcommand("run", "select prototypes from a CSV stream");
  run->add_option("--algo", algo, "protobasic | protostream | greedy | exhaustive")->capture_default_str();
  run->add_option("--m", run_cfg.m, "number of prototypes")->required();
  run->add_option("--epsilon", run_cfg.epsilon, "threshold ladder ratio, in (0, 1)")->capture_default_str();
  run->add_option("--bandwidth", bandwidth, "Gaussian width, or 'median'")->capture_default_str();
  run->add_option("--mu-mode", mu_mode, "exact | reservoir:R")->capture_default_str();
  run->add_option("--data", run_cfg.data_file, "input CSV, row order is stream order")->required();
  auto* target_opt = run->add_option("--target", "CSV sample of the target distribution")->type_name("TEXT");
  run->add_flag("--labels", run_cfg.labels, "last column of the data file is an integer label");
  auto* shuffle_opt = run->add_option("--shuffle", shuffle, "permute rows with this seed before streaming");
  run->add_option("--seed", run_cfg.seed, "seed for bandwidth subsampling, reservoir and k-means")->capture_default_str();
  run->add_option("--out", run_cfg.output, "JSON report path")->required();
  auto* compare_opt = run->add_option("--compare", compare, "second algorithm to run on the same stream");
  auto* test_opt = run->add_option("--test", "labeled CSV for 1-NN accuracy")->type_name("TEXT");
  auto* label_opt = run->add_option("--target-label", "label counted by the target match rate")->type_name("INT");
  auto* clusters_opt = run->add_option("--clusters", "k for the k-means coverage histogram")->type_name("UINT");
  run->add_flag("--check", run_cfg.check, "compare against the exhaustive optimum (n <= 25, m <= 4)");

  protosel::verify::VerifyConfig verify_cfg;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the randomised bound checks");
  verify->add_option("--seed", verify_cfg.seed, "base seed for instance generation")->capture_default_str();
  verify->add_option("--trials", verify_cfg.trials, "random instances per check")->capture_default_str();
  verify->add_option("--n", verify_cfg.n, "points per instance")->capture_default_str();
  verify->add_option("--m", verify_cfg.m, "cardinality budget")->capture_default_str();
  verify->add_option("--out", verify_out, "JSON report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      run_cfg.algorithm = protosel::cli::parse_algorithm(algo);
      run_cfg.bandwidth = protosel::cli::parse_bandwidth(bandwidth);
      run_cfg.mu_mode = protosel::cli::parse_mu_mode(mu_mode);
      if (*target_opt) run_cfg.target_file = target_opt->as<std::string>();
      if (*shuffle_opt) run_cfg.shuffle_seed = shuffle;
      if (*compare_opt) run_cfg.compare = protosel::cli::parse_algorithm(compare);
      if (*test_opt) run_cfg.test_file = test_opt->as<std::string>();
      if (*label_opt) run_cfg.target_label = label_opt->as<int>();
      if (*clusters_opt) run_cfg.clusters = clusters_opt->as<std::size_t>();
      return run_command(run_cfg);
    }
    return verify_command(verify_cfg, verify_out);
  } catch (const protosel::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const protosel::EvalError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const protosel::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const protosel::ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}
