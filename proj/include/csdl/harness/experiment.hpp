#pragma once

// Seeded Monte-Carlo reproduction of the four synthetic experiments:
//   exp1  error vs N under iid Gaussian noise, per sparsity rule
//   exp2  error vs n under iid and perfectly correlated Gaussian noise
//   exp3  error vs the tuning parameter lambda
//   exp4  error vs N under symmetric generalized Pareto noise
//
// Trial t of grid point g draws its instance and solver initialization from
// streams derived from hash(master_seed, g, t), so results do not depend on
// worker count or scheduling. Rows are sorted by (grid_index, trial) before
// they are written.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "csdl/bounds.hpp"
#include "csdl/harness/csv.hpp"
#include "csdl/harness/summarize.hpp"
#include "csdl/random.hpp"
#include "csdl/solver.hpp"
#include "csdl/synthesis.hpp"

namespace csdl::harness {

enum class ExperimentId { exp1, exp2, exp3, exp4 };
enum class Profile { desk, full };
enum class SparsityRule { constant_5, floor_sqrt_N, floor_N_over_10 };

constexpr std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::exp1: return "exp1";
    case ExperimentId::exp2: return "exp2";
    case ExperimentId::exp3: return "exp3";
    case ExperimentId::exp4: return "exp4";
  }
  return "?";
}

constexpr std::string_view to_string(Profile p) { return p == Profile::desk ? "desk" : "full"; }

constexpr std::string_view to_string(SparsityRule rule) {
  switch (rule) {
    case SparsityRule::constant_5: return "constant_5";
    case SparsityRule::floor_sqrt_N: return "floor_sqrt_N";
    case SparsityRule::floor_N_over_10: return "floor_N_over_10";
  }
  return "?";
}

inline ExperimentId parse_experiment(std::string_view s) {
  for (auto id : {ExperimentId::exp1, ExperimentId::exp2, ExperimentId::exp3, ExperimentId::exp4}) {
    if (s == to_string(id)) return id;
  }
  throw ParameterError(fmt::format("unknown experiment '{}'", s));
}

inline Profile parse_profile(std::string_view s) {
  if (s == "desk") return Profile::desk;
  if (s == "full") return Profile::full;
  throw ParameterError(fmt::format("unknown profile '{}' (expected desk or full)", s));
}

inline SparsityRule parse_sparsity_rule(std::string_view s) {
  for (auto r : {SparsityRule::constant_5, SparsityRule::floor_sqrt_N, SparsityRule::floor_N_over_10}) {
    if (s == to_string(r)) return r;
  }
  throw ParameterError(fmt::format("unknown sparsity rule '{}'", s));
}

/// Integer square root, exact for all int64 inputs used here.
inline std::int64_t floor_sqrt(std::int64_t v) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

inline std::int64_t sparsity_for(SparsityRule rule, std::int64_t length) {
  switch (rule) {
    case SparsityRule::constant_5: return 5;
    case SparsityRule::floor_sqrt_N: return floor_sqrt(length);
    case SparsityRule::floor_N_over_10: return length / 10;
  }
  return 0;
}

/// `count` values 10^a .. 10^b, evenly spaced in the exponent.
inline std::vector<double> log_space(double a, double b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? a : a + (b - a) * i / (count - 1);
    out.push_back(std::pow(10.0, e));
  }
  return out;
}

struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::exp1;
  /// Defaults to 50 (desk) or 1000 (full).
  std::optional<int> trials;
  std::uint64_t master_seed = 0;
  Profile profile = Profile::desk;
  int workers = 1;
  /// Replaces the swept values: N for exp1/exp4, n for exp2, lambda for exp3.
  std::vector<double> sweep;
  /// exp1/exp4: restrict to one rule (all three otherwise).
  std::optional<SparsityRule> sparsity_rule;
  /// exp2: restrict to one noise kind (iid and correlated otherwise).
  std::optional<NoiseKind> noise;

  // Fixed parameters of the data-generating process.
  std::int64_t length = 1000;
  /// exp2 sequence length; defaults to 2000 (desk) or 5000 (full).
  std::optional<std::int64_t> exp2_length;
  std::int64_t sparsity = 100;
  std::int64_t atom_length = 10;
  std::int64_t atoms = 5;
  double sigma = 0.1;

  int iterations = 200;
  double step_scale = 0.01;

  /// Fill wall_time_s. Off by default because timings break byte-identical
  /// reruns.
  bool record_timing = false;
  std::filesystem::path output_dir = ".";

  int effective_trials() const { return trials.value_or(profile == Profile::full ? 1000 : 50); }

  void validate() const {
    if (effective_trials() < 1) throw ParameterError("trials must be >= 1");
    if (workers < 1) throw ParameterError("workers must be >= 1");
    if (length < 1 || atom_length < 1 || atoms < 1 || sparsity < 0) throw ParameterError("invalid default sizes");
    if (!(sigma >= 0.0)) throw ParameterError("sigma must be >= 0");
    for (double v : sweep) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(fmt::format("grid value {} must be positive", v));
    }
  }
};

struct GridPoint {
  std::int64_t length = 0;
  std::int64_t atom_length = 0;
  std::int64_t atoms = 0;
  std::int64_t sparsity = 0;
  /// Solver budget; the realized ||R||_{1,1} of each instance when unset.
  std::optional<double> lambda;
  NoiseModel noise;
};

inline std::vector<GridPoint> build_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool full = cfg.profile == Profile::full;
  auto as_ints = [](const std::vector<double>& v) {
    std::vector<std::int64_t> out;
    for (double x : v) out.push_back(static_cast<std::int64_t>(std::llround(x)));
    return out;
  };
  const std::vector<SparsityRule> all_rules = {SparsityRule::constant_5, SparsityRule::floor_sqrt_N,
                                               SparsityRule::floor_N_over_10};

  std::vector<GridPoint> grid;
  switch (cfg.experiment) {
    case ExperimentId::exp1:
    case ExperimentId::exp4: {
      const auto lengths = as_ints(!cfg.sweep.empty() ? cfg.sweep
                                   : full             ? log_space(2.0, 4.0, 9)
                                                      : std::vector<double>{100, 316, 1000, 3162});
      const auto rules = cfg.sparsity_rule ? std::vector<SparsityRule>{*cfg.sparsity_rule} : all_rules;
      NoiseModel noise;
      noise.sigma = cfg.sigma;
      noise.kind = cfg.experiment == ExperimentId::exp1 ? NoiseKind::iid_gaussian : NoiseKind::generalized_pareto;
      for (const auto rule : rules) {
        for (const auto length : lengths) {
          grid.push_back({length, cfg.atom_length, cfg.atoms, sparsity_for(rule, length), std::nullopt, noise});
        }
      }
      break;
    }
    case ExperimentId::exp2: {
      const std::int64_t length = cfg.exp2_length.value_or(full ? 5000 : 2000);
      const auto atom_lengths = as_ints(!cfg.sweep.empty() ? cfg.sweep
                                        : full             ? log_space(0.5, 3.0, 6)
                                                           : std::vector<double>{10, 32, 100, 316});
      const auto kinds = cfg.noise ? std::vector<NoiseKind>{*cfg.noise}
                                   : std::vector<NoiseKind>{NoiseKind::iid_gaussian, NoiseKind::correlated_gaussian};
      for (const auto kind : kinds) {
        for (const auto n : atom_lengths) {
          NoiseModel noise;
          noise.kind = kind;
          noise.sigma = cfg.sigma;
          grid.push_back({length, n, cfg.atoms, cfg.sparsity, std::nullopt, noise});
        }
      }
      break;
    }
    case ExperimentId::exp3: {
      const std::int64_t s = floor_sqrt(cfg.length);
      const auto sd = static_cast<double>(s);
      const auto lambdas = !cfg.sweep.empty() ? cfg.sweep
                           : full             ? log_space(-2.0, 4.0, 13)
                                              : std::vector<double>{0.1, 1.0, sd, 10.0 * sd, 100.0 * sd};
      NoiseModel noise;
      noise.sigma = cfg.sigma;
      for (const double lambda : lambdas) {
        grid.push_back({cfg.length, cfg.atom_length, cfg.atoms, s, lambda, noise});
      }
      break;
    }
  }
  for (const auto& g : grid) {
    if (g.atom_length > g.length) {
      throw ParameterError(fmt::format("grid point has n={} > N={}", g.atom_length, g.length));
    }
  }
  return grid;
}

/// Seed of trial `trial` at grid point `grid_index`.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t grid_index, std::int64_t trial) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(trial)});
}

/// Runs one planted instance through the solver. Exceptions propagate.
inline TrialRecord run_trial(const ExperimentConfig& cfg, const GridPoint& point, std::int64_t grid_index,
                             std::int64_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = trial_seed(cfg.master_seed, grid_index, trial);

  InstanceParams params;
  params.length = point.length;
  params.atom_length = point.atom_length;
  params.atoms = point.atoms;
  params.sparsity = point.sparsity;
  params.noise = point.noise;
  params.seed = derive_seed(seed, {0});
  const PlantedInstance inst = plant_instance(params);

  SolverConfig solver;
  solver.mode = SolverMode::constrained;
  solver.lambda = point.lambda.value_or(inst.encoding.sum());
  solver.iterations = cfg.iterations;
  solver.step_scale = cfg.step_scale;
  solver.atom_length = point.atom_length;
  solver.atoms = point.atoms;
  solver.seed = derive_seed(seed, {1});
  const SolveResult fit = solve_constrained(inst.observed, solver);

  const auto big_n = static_cast<double>(point.length);
  const TrivialRisks trivial = trivial_estimator_risks(inst);

  TrialRecord rec;
  rec.experiment = std::string(to_string(cfg.experiment));
  rec.grid_index = grid_index;
  rec.length = point.length;
  rec.atom_length = point.atom_length;
  rec.atoms = point.atoms;
  rec.sparsity = point.sparsity;
  rec.lambda = solver.lambda;
  rec.noise_kind = std::string(to_string(point.noise.kind));
  rec.trial = trial;
  rec.seed = seed;
  rec.mse_csdl = (fit.reconstruction - inst.clean).squaredNorm() / big_n;
  rec.mse_zero = trivial.zero;
  rec.final_objective = fit.final_objective;
  if (point.noise.kind != NoiseKind::generalized_pareto) {
    // The identity estimator has infinite expected risk under the heavy
    // tailed model, and the sub-Gaussian bounds do not apply there.
    rec.mse_identity = trivial.identity;
    BoundInputs in;
    in.length = point.length;
    in.atom_length = point.atom_length;
    in.atoms = point.atoms;
    in.lambda = solver.lambda;
    in.sigma = point.noise.sigma;
    rec.bounds = evaluate_bounds(in);
  }
  if (cfg.record_timing) {
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

inline TrialRecord failure_record(const ExperimentConfig& cfg, const GridPoint& point, std::int64_t grid_index,
                                  std::int64_t trial, std::string message) {
  TrialRecord rec;
  rec.experiment = std::string(to_string(cfg.experiment));
  rec.grid_index = grid_index;
  rec.length = point.length;
  rec.atom_length = point.atom_length;
  rec.atoms = point.atoms;
  rec.sparsity = point.sparsity;
  rec.lambda = point.lambda.value_or(static_cast<double>(point.sparsity));
  rec.noise_kind = std::string(to_string(point.noise.kind));
  rec.trial = trial;
  rec.seed = trial_seed(cfg.master_seed, grid_index, trial);
  rec.error = std::move(message);
  return rec;
}

inline Metadata experiment_metadata(const ExperimentConfig& cfg) {
  Metadata meta = {{"experiment", std::string(to_string(cfg.experiment))},
                   {"profile", std::string(to_string(cfg.profile))},
                   {"master_seed", std::to_string(cfg.master_seed)},
                   {"trials", std::to_string(cfg.effective_trials())},
                   {"iterations", std::to_string(cfg.iterations)},
                   {"step_scale", format_real(cfg.step_scale)}};
  switch (cfg.experiment) {
    case ExperimentId::exp1:
    case ExperimentId::exp4:
      meta.emplace_back("sparsity_rule", cfg.sparsity_rule ? std::string(to_string(*cfg.sparsity_rule)) : "all");
      break;
    case ExperimentId::exp2:
      meta.emplace_back("noise", cfg.noise ? std::string(to_string(*cfg.noise)) : "all");
      break;
    case ExperimentId::exp3:
      meta.emplace_back("sparsity_rule", "floor_sqrt_N");
      break;
  }
  return meta;
}

struct ExperimentOutput {
  std::vector<TrialRecord> records;
  std::vector<SummaryRow> summary;
  std::filesystem::path trials_path;
  std::filesystem::path summary_path;
};

/// Runs every trial of every grid point without touching the filesystem.
/// A failed trial ends its grid point: later trials of that point are
/// dropped and the failure is kept as a row with empty outputs.
inline std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const auto grid = build_grid(cfg);
  const auto trials = static_cast<std::int64_t>(cfg.effective_trials());
  const auto total = static_cast<std::int64_t>(grid.size()) * trials;

  std::vector<TrialRecord> slots(static_cast<std::size_t>(total));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t task = next.fetch_add(1); task < total; task = next.fetch_add(1)) {
      const auto g = task / trials;
      const auto t = task % trials;
      const auto& point = grid[static_cast<std::size_t>(g)];
      try {
        slots[static_cast<std::size_t>(task)] = run_trial(cfg, point, g, t);
      } catch (const std::exception& e) {
        slots[static_cast<std::size_t>(task)] = failure_record(cfg, point, g, t, e.what());
      }
    }
  };
  const int workers = static_cast<int>(std::min<std::int64_t>(cfg.workers, std::max<std::int64_t>(total, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<TrialRecord> records;
  records.reserve(slots.size());
  for (std::int64_t g = 0; g < static_cast<std::int64_t>(grid.size()); ++g) {
    for (std::int64_t t = 0; t < trials; ++t) {
      auto& rec = slots[static_cast<std::size_t>(g * trials + t)];
      const bool failed = rec.failed();
      if (failed && log) {
        *log << fmt::format("{} grid point {} aborted at trial {}: {}\n", rec.experiment, g, t, rec.error);
      }
      records.push_back(std::move(rec));
      if (failed) break;
    }
  }
  return records;
}

/// Runs the experiment and writes <out>/<exp>_trials.csv and
/// <out>/<exp>_summary.csv.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  ExperimentOutput out;
  const auto meta = experiment_metadata(cfg);
  const auto trials_text = render_trials_csv(run_trials(cfg, log), meta);
  // Summarize what was written, so re-summarizing the file reproduces the
  // summary table exactly.
  out.records = parse_trials_csv(trials_text).records;
  out.summary = summarize(out.records, log);
  const auto name = std::string(to_string(cfg.experiment));
  out.trials_path = cfg.output_dir / (name + "_trials.csv");
  out.summary_path = cfg.output_dir / (name + "_summary.csv");
  write_text_file(out.trials_path, trials_text);
  write_text_file(out.summary_path, render_summary_csv(out.summary, meta));
  return out;
}

}  // namespace csdl::harness
