#pragma once

// Alternating projected gradient descent for CSDL.
//
// Constrained form:   min ||Y - R (x) D||^2  s.t. R >= 0, ||R||_{1,1} <= lambda,
//                                             unit-norm columns of D.
// Penalized form:     min ||Y - R (x) D||^2 + lambda' ||R||_{1,1}  s.t. R >= 0,
//                                             unit-norm columns of D.
//
// Each iteration i = 1..T uses step gamma_i = step_scale / sqrt(i) and
// performs, in order: a gradient step in D, projection of the columns of D
// onto the unit sphere, a gradient step in R (at the updated D), and the
// R projection (L_{1,1} ball) or proximal step (penalty).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "csdl/errors.hpp"
#include "csdl/projections.hpp"
#include "csdl/random.hpp"
#include "csdl/tensor_ops.hpp"

namespace csdl {

enum class SolverMode { constrained, penalized };

constexpr std::string_view to_string(SolverMode mode) {
  return mode == SolverMode::constrained ? "constrained" : "penalized";
}

struct SolverConfig {
  SolverMode mode = SolverMode::constrained;
  /// L_{1,1} budget (constrained mode).
  double lambda = 1.0;
  /// Penalty weight (penalized mode).
  double lambda_prime = 0.0;
  int iterations = 200;
  double step_scale = 0.01;
  std::uint64_t seed = 0;
  Eigen::Index atom_length = 10;  // n
  Eigen::Index atoms = 5;         // K

  // Off by default: the fixed schedule above runs unmodified.
  /// Stop once the relative objective change drops below this value (0 = never).
  double early_stop_tolerance = 0.0;
  /// Extra random initializations; the run with the lowest final objective wins.
  int restarts = 0;
  /// Halve the step of a block update until it does not increase the objective.
  bool line_search = false;

  void validate() const {
    if (iterations < 1) throw ParameterError(fmt::format("solver: iterations must be >= 1, got {}", iterations));
    if (!(step_scale > 0.0)) throw ParameterError(fmt::format("solver: step_scale must be > 0, got {}", step_scale));
    if (atom_length < 1 || atoms < 1) throw ParameterError("solver: need n >= 1 and K >= 1");
    if (mode == SolverMode::constrained && !(lambda >= 0.0)) {
      throw ParameterError(fmt::format("solver: lambda must be >= 0, got {}", lambda));
    }
    if (mode == SolverMode::penalized && !(lambda_prime >= 0.0)) {
      throw ParameterError(fmt::format("solver: lambda' must be >= 0, got {}", lambda_prime));
    }
    if (!(early_stop_tolerance >= 0.0)) throw ParameterError("solver: early_stop_tolerance must be >= 0");
    if (restarts < 0) throw ParameterError("solver: restarts must be >= 0");
  }
};

struct SolveResult {
  EncodingMatrix encoding;
  Dictionary dictionary;
  /// encoding (x) dictionary, recomputed from the returned factors.
  Signal reconstruction;
  /// Objective after each iteration. In penalized mode this includes the
  /// lambda' ||R||_{1,1} term.
  std::vector<double> objective_trace;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations_run = 0;
};

/// State handed to an observer after every iteration (after both
/// projections).
struct IterationState {
  int iteration = 0;
  double step = 0.0;
  const EncodingMatrix& encoding;
  const Dictionary& dictionary;
  double objective = 0.0;
};

using IterationObserver = std::function<void(const IterationState&)>;

namespace detail {

class AlternatingSolver {
 public:
  AlternatingSolver(const Signal& y, const SolverConfig& cfg) : y_(y), cfg_(cfg) {}

  SolveResult run(std::uint64_t seed, const IterationObserver& observer) const {
    Engine rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index rows = y_.size() - cfg_.atom_length + 1;

    Matrix d(cfg_.atom_length, cfg_.atoms);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    Matrix r(rows, cfg_.atoms);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = normal(rng);

    d = project_columns_to_sphere(std::move(d));
    r = update_encoding_feasible(std::move(r), 0.0, /*initial=*/true);

    SolveResult out;
    out.initial_objective = objective(r, d);
    out.objective_trace.reserve(static_cast<std::size_t>(cfg_.iterations));
    double previous = out.initial_objective;

    for (int i = 1; i <= cfg_.iterations; ++i) {
      const double gamma = cfg_.step_scale / std::sqrt(static_cast<double>(i));

      Signal residual = multi_convolve(r, d) - y_;
      const Matrix grad_d = dictionary_gradient(residual, r);
      d = step_dictionary(r, d, grad_d, gamma);

      residual = multi_convolve(r, d) - y_;
      const Matrix grad_r = encoding_gradient(residual, d);
      r = step_encoding(r, d, grad_r, gamma);

      const double f = objective(r, d);
      if (!std::isfinite(f)) {
        throw NumericalError(fmt::format("solver: objective became non-finite at iteration {}", i));
      }
      out.objective_trace.push_back(f);
      out.iterations_run = i;
      if (observer) observer(IterationState{i, gamma, r, d, f});

      if (cfg_.early_stop_tolerance > 0.0 &&
          std::abs(previous - f) <= cfg_.early_stop_tolerance * std::max(std::abs(previous), 1e-300)) {
        break;
      }
      previous = f;
    }

    out.reconstruction = multi_convolve(r, d);
    out.final_objective = objective(r, d);
    out.encoding = std::move(r);
    out.dictionary = std::move(d);
    return out;
  }

 private:
  double data_fit(const Matrix& r, const Matrix& d) const { return (multi_convolve(r, d) - y_).squaredNorm(); }

  double objective(const Matrix& r, const Matrix& d) const {
    const double fit = data_fit(r, d);
    if (cfg_.mode == SolverMode::penalized) return fit + cfg_.lambda_prime * r.sum();
    return fit;
  }

  Matrix update_encoding_feasible(Matrix r, double gamma, bool initial = false) const {
    if (cfg_.mode == SolverMode::constrained) return project_nonneg_l11_ball(std::move(r), cfg_.lambda);
    return prox_nonneg_l1(r, initial ? 0.0 : gamma * cfg_.lambda_prime);
  }

  Matrix step_dictionary(const Matrix& r, const Matrix& d, const Matrix& grad, double gamma) const {
    Matrix next = project_columns_to_sphere<double>(d - gamma * grad);
    if (!cfg_.line_search) return next;
    const double base = objective(r, d);
    for (int halving = 0; halving < 30 && objective(r, next) > base; ++halving) {
      gamma *= 0.5;
      next = project_columns_to_sphere<double>(d - gamma * grad);
    }
    return next;
  }

  Matrix step_encoding(const Matrix& r, const Matrix& d, const Matrix& grad, double gamma) const {
    Matrix next = update_encoding_feasible(r - gamma * grad, gamma);
    if (!cfg_.line_search) return next;
    const double base = objective(r, d);
    for (int halving = 0; halving < 30 && objective(next, d) > base; ++halving) {
      gamma *= 0.5;
      next = update_encoding_feasible(r - gamma * grad, gamma);
    }
    return next;
  }

  const Signal& y_;
  const SolverConfig& cfg_;
};

inline void check_solver_input(const Signal& y, const SolverConfig& cfg) {
  cfg.validate();
  if (y.size() < cfg.atom_length) {
    throw DimensionError(fmt::format("solver: signal length {} shorter than atom length {}", y.size(), cfg.atom_length));
  }
  if (!all_finite(y)) throw InputError("solver: signal has non-finite entries");
}

inline SolveResult solve_with_restarts(const Signal& y, const SolverConfig& cfg, const IterationObserver& observer) {
  check_solver_input(y, cfg);
  const AlternatingSolver solver(y, cfg);
  SolveResult best = solver.run(cfg.seed, observer);
  for (int restart = 1; restart <= cfg.restarts; ++restart) {
    SolveResult candidate = solver.run(derive_seed(cfg.seed, {static_cast<std::uint64_t>(restart)}), observer);
    if (candidate.final_objective < best.final_objective) best = std::move(candidate);
  }
  return best;
}

}  // namespace detail

/// Constrained CSDL. Returns the last iterate of the alternating scheme.
inline SolveResult solve_constrained(const Signal& y, const SolverConfig& cfg, const IterationObserver& observer = {}) {
  if (cfg.mode != SolverMode::constrained) throw ParameterError("solve_constrained: config is not in constrained mode");
  return detail::solve_with_restarts(y, cfg, observer);
}

/// Penalized CSDL: the R update is a gradient step followed by
/// prox_nonneg_l1 with threshold gamma * lambda'. R is initialized by
/// clipping a Gaussian matrix at zero.
inline SolveResult solve_penalized(const Signal& y, const SolverConfig& cfg, const IterationObserver& observer = {}) {
  if (cfg.mode != SolverMode::penalized) throw ParameterError("solve_penalized: config is not in penalized mode");
  return detail::solve_with_restarts(y, cfg, observer);
}

inline SolveResult solve(const Signal& y, const SolverConfig& cfg, const IterationObserver& observer = {}) {
  return cfg.mode == SolverMode::constrained ? solve_constrained(y, cfg, observer) : solve_penalized(y, cfg, observer);
}

}  // namespace csdl
