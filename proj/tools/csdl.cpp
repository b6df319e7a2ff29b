// csdl: command-line front end for the experiment harness.
//
//   csdl exp1|exp2|exp3|exp4 [--trials T] [--seed S] [--out DIR] [--profile desk|full]
//                            [--workers W] [--sparsity-rule R] [--noise iid|correlated]
//   csdl fit --input F --n N --k K (--lambda L | --lambda-prime LP | --delta D --sigma S) [--truth F]
//   csdl summarize --input F --out F
//
// Every option can also come from a key = value file given with --config;
// flags on the command line win. Exit codes: 0 success, 1 input error,
// 2 I/O error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "csdl/csdl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct ExperimentFlags {
  std::optional<int> trials;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string profile = "desk";
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::string> sparsity_rule;
  std::optional<std::string> noise;
  std::vector<double> grid;
  int iterations = 200;
  double step_scale = 0.01;
  bool timing = false;
};

void add_experiment_options(CLI::App& cmd, ExperimentFlags& f) {
  cmd.add_option("--trials", f.trials, "Trials per grid point (default 50 desk, 1000 full)")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", f.seed, "Master seed");
  cmd.add_option("--out", f.out, "Output directory");
  cmd.add_option("--profile", f.profile, "Grid/trial profile")->check(CLI::IsMember({"desk", "full"}));
  cmd.add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd.add_option("--sparsity-rule", f.sparsity_rule, "exp1/exp4 sparsity rule")
      ->check(CLI::IsMember({"constant_5", "floor_sqrt_N", "floor_N_over_10"}));
  cmd.add_option("--noise", f.noise, "exp2 noise kind")->check(CLI::IsMember({"iid", "correlated"}));
  cmd.add_option("--grid", f.grid, "Override swept values (N, n or lambda)")->delimiter(',');
  cmd.add_option("--iterations", f.iterations, "Solver iterations")->check(CLI::PositiveNumber);
  cmd.add_option("--step-scale", f.step_scale, "Solver step scale")->check(CLI::PositiveNumber);
  cmd.add_flag("--timing", f.timing, "Record per-trial wall time (breaks byte-identical reruns)");
}

csdl::harness::ExperimentConfig to_config(csdl::harness::ExperimentId id, const ExperimentFlags& f) {
  using namespace csdl::harness;
  ExperimentConfig cfg;
  cfg.experiment = id;
  cfg.trials = f.trials;
  cfg.master_seed = f.seed;
  cfg.output_dir = f.out;
  cfg.profile = parse_profile(f.profile);
  cfg.workers = f.workers;
  cfg.sweep = f.grid;
  cfg.iterations = f.iterations;
  cfg.step_scale = f.step_scale;
  cfg.record_timing = f.timing;
  if (f.sparsity_rule) {
    if (id != ExperimentId::exp1 && id != ExperimentId::exp4) {
      throw csdl::ParameterError("--sparsity-rule applies to exp1 and exp4 only");
    }
    cfg.sparsity_rule = parse_sparsity_rule(*f.sparsity_rule);
  }
  if (f.noise) {
    if (id != ExperimentId::exp2) throw csdl::ParameterError("--noise applies to exp2 only");
    cfg.noise = csdl::parse_noise_kind(*f.noise);
  }
  return cfg;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "csdl: error: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional sparse dictionary learning: estimators, bounds and experiments"};
  app.set_config("--config", "", "Key = value file mirroring the command-line flags");
  app.require_subcommand(1);

  using csdl::harness::ExperimentId;
  const std::vector<std::pair<ExperimentId, std::string>> experiments = {
      {ExperimentId::exp1, "Error vs sequence length N (iid Gaussian noise)"},
      {ExperimentId::exp2, "Error vs atom length n (iid vs correlated noise)"},
      {ExperimentId::exp3, "Error vs tuning parameter lambda"},
      {ExperimentId::exp4, "Error vs N under generalized Pareto noise"},
  };
  std::vector<ExperimentFlags> flags(experiments.size());
  std::vector<CLI::App*> experiment_cmds;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    auto* cmd = app.add_subcommand(std::string(to_string(experiments[i].first)), experiments[i].second);
    add_experiment_options(*cmd, flags[i]);
    experiment_cmds.push_back(cmd);
  }

  csdl::harness::FitOptions fit;
  std::string fit_input, fit_out = ".";
  std::optional<std::string> fit_truth;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a signal read from a one-column CSV");
  fit_cmd->add_option("--input", fit_input, "Signal CSV (column 'value')")->required();
  fit_cmd->add_option("--n", fit.atom_length, "Atom length")->required()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--k", fit.atoms, "Number of atoms")->required()->check(CLI::PositiveNumber);
  auto* lambda_opt = fit_cmd->add_option("--lambda", fit.lambda, "L_{1,1} budget (constrained)");
  auto* lambda_prime_opt = fit_cmd->add_option("--lambda-prime", fit.lambda_prime, "Penalty weight (penalized)");
  lambda_opt->excludes(lambda_prime_opt);
  fit_cmd->add_option("--delta", fit.delta, "Failure probability for the penalized bound");
  fit_cmd->add_option("--sigma", fit.sigma, "Noise level, enables bound certificates");
  fit_cmd->add_flag("--lambda-prime-proof", fit.lambda_prime_proof,
                    "With --delta/--sigma, use sigma*sqrt(2 n log(2N/delta))");
  fit_cmd->add_option("--truth", fit_truth, "Ground-truth signal CSV");
  fit_cmd->add_option("--out", fit_out, "Output directory");
  fit_cmd->add_option("--iterations", fit.iterations, "Solver iterations")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--step-scale", fit.step_scale, "Solver step scale")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed, "Initialization seed");

  std::string summarize_in, summarize_out;
  auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate a per-trial CSV by grid point");
  summarize_cmd->add_option("--input", summarize_in, "Per-trial CSV")->required();
  summarize_cmd->add_option("--out", summarize_out, "Summary CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    for (std::size_t i = 0; i < experiments.size(); ++i) {
      if (!experiment_cmds[i]->parsed()) continue;
      const auto cfg = to_config(experiments[i].first, flags[i]);
      const auto out = csdl::harness::run_experiment(cfg, &std::cerr);
      std::cout << fmt::format("wrote {} ({} rows) and {} ({} grid points)\n", out.trials_path.string(),
                               out.records.size(), out.summary_path.string(), out.summary.size());
      for (const auto& row : out.summary) {
        std::cout << fmt::format("  grid {:>2}  N={:<5} n={:<4} sparsity={:<4} lambda={:<8.4g} noise={:<10} "
                                 "mse_csdl={:.4g} mse_zero={:.4g}\n",
                                 row.grid_index, row.length, row.atom_length, row.sparsity, row.lambda,
                                 row.noise_kind, row.mse_csdl->mean, row.mse_zero ? row.mse_zero->mean : 0.0);
      }
      return kExitOk;
    }
    if (fit_cmd->parsed()) {
      fit.input = fit_input;
      fit.output_dir = fit_out;
      if (fit_truth) fit.truth = *fit_truth;
      const auto report = csdl::harness::run_fit(fit);
      std::cout << report.json.dump(2) << '\n';
      return kExitOk;
    }
    if (summarize_cmd->parsed()) {
      const auto rows = csdl::harness::summarize_file(summarize_in, summarize_out, &std::cerr);
      std::cout << fmt::format("wrote {} ({} grid points)\n", summarize_out, rows.size());
      return kExitOk;
    }
  } catch (const csdl::IoError& e) {
    return report_error(e, kExitIo);
  } catch (const csdl::NumericalError& e) {
    return report_error(e, kExitNumerical);
  } catch (const csdl::Error& e) {
    return report_error(e, kExitInput);
  } catch (const std::exception& e) {
    return report_error(e, kExitNumerical);
  }
  return kExitInput;
}
