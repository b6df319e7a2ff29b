#pragma once

// Closed-form minimax risk bounds for CSDL and the trivial-estimator
// baselines. All logarithms are natural.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include <fmt/format.h>

#include "csdl/errors.hpp"
#include "csdl/synthesis.hpp"

namespace csdl {

struct BoundInputs {
  std::int64_t length = 1000;       // N
  std::int64_t atom_length = 10;    // n
  double lambda = 100.0;            // L_{1,1} budget
  double sigma = 0.1;               // sub-Gaussian constant
  std::int64_t atoms = 5;           // K; not used by any formula
  double moment = 1.0;              // mu_p
  double moment_order = 2.0;        // p, may be +inf
  double delta = 0.05;              // failure probability
  /// Penalty weight; recommended_lambda_prime(sigma, N, delta) when unset.
  std::optional<double> lambda_prime;

  void validate() const {
    if (atom_length < 1 || length < atom_length) {
      throw ParameterError(fmt::format("bounds: need N >= n >= 1, got N={} n={}", length, atom_length));
    }
    if (!(lambda >= 0.0) || !(sigma >= 0.0) || !(moment >= 0.0)) {
      throw ParameterError("bounds: lambda, sigma and mu_p must be >= 0");
    }
  }
};

namespace detail {

inline double dbl(std::int64_t v) { return static_cast<double>(v); }

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError(fmt::format("delta must lie in (0, 1), got {}", delta));
}

}  // namespace detail

/// Upper bound under componentwise sub-Gaussian noise:
/// 4 lambda sigma sqrt(2 n log(2N)) / N.
inline double ub_componentwise(const BoundInputs& in) {
  in.validate();
  const double n = detail::dbl(in.atom_length), big_n = detail::dbl(in.length);
  return 4.0 * in.lambda * in.sigma * std::sqrt(2.0 * n * std::log(2.0 * big_n)) / big_n;
}

/// Upper bound under jointly sub-Gaussian noise:
/// 4 lambda sigma sqrt(2 log(2(N - n + 1))) / N.
inline double ub_joint(const BoundInputs& in) {
  in.validate();
  const double big_n = detail::dbl(in.length);
  const double positions = detail::dbl(in.length - in.atom_length + 1);
  return 4.0 * in.lambda * in.sigma * std::sqrt(2.0 * std::log(2.0 * positions)) / big_n;
}

/// Minimax lower bound, componentwise noise:
/// lambda / (8N) * min(lambda, sigma sqrt(n log(N - n + 1))).
inline double lb_componentwise(const BoundInputs& in) {
  in.validate();
  const double n = detail::dbl(in.atom_length), big_n = detail::dbl(in.length);
  const double positions = detail::dbl(in.length - in.atom_length + 1);
  return in.lambda / (8.0 * big_n) * std::min(in.lambda, in.sigma * std::sqrt(n * std::log(positions)));
}

/// Minimax lower bound, Gaussian white noise:
/// lambda / (8N) * min(lambda, sigma sqrt(log(N - n + 1))).
inline double lb_joint(const BoundInputs& in) {
  in.validate();
  const double big_n = detail::dbl(in.length);
  const double positions = detail::dbl(in.length - in.atom_length + 1);
  return in.lambda / (8.0 * big_n) * std::min(in.lambda, in.sigma * std::sqrt(std::log(positions)));
}

/// Upper bound when each noise coordinate only has a bounded p-th moment:
/// 4 lambda mu_p N^((1-p)/p) n^max(0, (p-2)/(2p)). p = inf is the limit
/// 4 lambda mu N^-1 sqrt(n).
inline double ub_moment(const BoundInputs& in) {
  in.validate();
  const double p = in.moment_order;
  if (!(p >= 1.0)) throw ParameterError(fmt::format("ub_moment: need p >= 1, got {}", p));
  const double n = detail::dbl(in.atom_length), big_n = detail::dbl(in.length);
  const double length_exp = std::isinf(p) ? -1.0 : (1.0 - p) / p;
  const double atom_exp = std::isinf(p) ? 0.5 : std::max(0.0, (p - 2.0) / (2.0 * p));
  return 4.0 * in.lambda * in.moment * std::pow(big_n, length_exp) * std::pow(n, atom_exp);
}

/// sigma sqrt(2 log(2N / delta)).
inline double recommended_lambda_prime(double sigma, std::int64_t length, double delta) {
  detail::check_delta(delta);
  if (!(sigma >= 0.0)) throw ParameterError("recommended_lambda_prime: sigma must be >= 0");
  if (length < 1) throw ParameterError("recommended_lambda_prime: need N >= 1");
  return sigma * std::sqrt(2.0 * std::log(2.0 * detail::dbl(length) / delta));
}

/// The larger penalty sigma sqrt(2 n log(2N / delta)) under which the
/// high-probability argument for the penalized estimator goes through.
inline double conservative_lambda_prime(double sigma, std::int64_t length, std::int64_t atom_length,
                                        double delta) {
  return recommended_lambda_prime(sigma, length, delta) * std::sqrt(detail::dbl(atom_length));
}

/// High-probability bound for penalized CSDL:
/// 4 lambda' sigma sqrt(2 n log(2N / delta)) / N.
inline double ub_penalized(const BoundInputs& in) {
  in.validate();
  detail::check_delta(in.delta);
  const double lp = in.lambda_prime.value_or(recommended_lambda_prime(in.sigma, in.length, in.delta));
  const double n = detail::dbl(in.atom_length), big_n = detail::dbl(in.length);
  return 4.0 * lp * in.sigma * std::sqrt(2.0 * n * std::log(2.0 * big_n / in.delta)) / big_n;
}

/// Bound for patch-based IID SDL with N' samples of dimension d' and
/// L_{1,1} budget lambda': 4 lambda' sigma sqrt(2 d' log(2 N' d')) / (N' d').
inline double ub_iid_sdl(std::int64_t samples, std::int64_t dimension, double lambda_prime, double sigma) {
  if (samples < 1 || dimension < 1) throw ParameterError("ub_iid_sdl: need N' >= 1 and d' >= 1");
  if (!(lambda_prime >= 0.0) || !(sigma >= 0.0)) throw ParameterError("ub_iid_sdl: need lambda', sigma >= 0");
  const double np = detail::dbl(samples), dp = detail::dbl(dimension);
  return 4.0 * lambda_prime * sigma * std::sqrt(2.0 * dp * std::log(2.0 * np * dp)) / (np * dp);
}

struct TrivialRisks {
  double zero = 0.0;      // X_hat = 0
  double identity = 0.0;  // X_hat = Y
};

inline TrivialRisks trivial_estimator_risks(const PlantedInstance& inst) {
  const double big_n = static_cast<double>(inst.clean.size());
  return {inst.clean.squaredNorm() / big_n, inst.noise.squaredNorm() / big_n};
}

/// Violation of the oracle inequality
///   ||X - Xhat||^2 <= ||X - C||^2 + 2 <eps, Xhat - C>
/// for a feasible comparator C = R (x) D: returns lhs - rhs. The inequality
/// is guaranteed only when Xhat is a global minimizer, so a positive value
/// measures how far an iterate is from one. Algebraically this equals
/// ||Y - Xhat||^2 - ||Y - C||^2.
inline double oracle_inequality_gap(const Signal& clean, const Signal& noise, const Signal& reconstruction,
                                    const Signal& comparator) {
  const double lhs = (clean - reconstruction).squaredNorm();
  const double rhs = (clean - comparator).squaredNorm() + 2.0 * noise.dot(reconstruction - comparator);
  return lhs - rhs;
}

/// The four sub-Gaussian bounds evaluated together.
struct BoundSet {
  double ub_componentwise = 0.0;
  double ub_joint = 0.0;
  double lb_componentwise = 0.0;
  double lb_joint = 0.0;
};

inline BoundSet evaluate_bounds(const BoundInputs& in) {
  return {ub_componentwise(in), ub_joint(in), lb_componentwise(in), lb_joint(in)};
}

}  // namespace csdl
