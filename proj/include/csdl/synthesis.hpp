#pragma once

// Planted TLGM instances: Y = R (x) D + noise, with a uniformly random
// dictionary, an integer-valued encoding of prescribed L_{1,1} mass, and one
// of three noise models.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "csdl/errors.hpp"
#include "csdl/projections.hpp"
#include "csdl/random.hpp"
#include "csdl/tensor_ops.hpp"

namespace csdl {

enum class NoiseKind { iid_gaussian, correlated_gaussian, generalized_pareto };

/// Short name used in CSV files and on the command line.
constexpr std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::iid_gaussian: return "iid";
    case NoiseKind::correlated_gaussian: return "correlated";
    case NoiseKind::generalized_pareto: return "gp";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "iid" || name == "iid_gaussian") return NoiseKind::iid_gaussian;
  if (name == "correlated" || name == "correlated_gaussian") return NoiseKind::correlated_gaussian;
  if (name == "gp" || name == "generalized_pareto") return NoiseKind::generalized_pareto;
  throw ParameterError(fmt::format("unknown noise kind '{}'", name));
}

struct NoiseModel {
  NoiseKind kind = NoiseKind::iid_gaussian;
  /// Standard deviation of the Gaussian models.
  double sigma = 0.1;
  /// Threshold, scale and tail index of the symmetric generalized Pareto
  /// model. |x| is supported on [location, inf).
  double gp_location = 2.0;
  double gp_scale = 1.0;
  double gp_shape = 0.5;

  void validate() const {
    if (!(sigma >= 0.0)) throw ParameterError(fmt::format("noise sigma must be >= 0, got {}", sigma));
    if (!(gp_scale > 0.0)) throw ParameterError(fmt::format("gp scale must be > 0, got {}", gp_scale));
    if (!(gp_shape > 0.0)) throw ParameterError(fmt::format("gp shape must be > 0, got {}", gp_shape));
    if (!std::isfinite(gp_location)) throw ParameterError("gp location must be finite");
  }
};

/// Inverse CDF of |x| under the generalized Pareto model, evaluated at
/// u in [0, 1): location + (scale / shape) * ((1 - u)^(-shape) - 1).
inline double gp_magnitude(double u, const NoiseModel& model) {
  return model.gp_location + (model.gp_scale / model.gp_shape) * (std::pow(1.0 - u, -model.gp_shape) - 1.0);
}

/// Closed-form CDF of |x|, the inverse of gp_magnitude.
inline double gp_magnitude_cdf(double magnitude, const NoiseModel& model) {
  if (magnitude <= model.gp_location) return 0.0;
  const double z = 1.0 + model.gp_shape * (magnitude - model.gp_location) / model.gp_scale;
  return 1.0 - std::pow(z, -1.0 / model.gp_shape);
}

/// K atoms drawn uniformly from the unit sphere in R^n (normalized Gaussians).
inline Dictionary sample_dictionary(Eigen::Index n, Eigen::Index atoms, Engine& rng) {
  if (n < 1 || atoms < 1) {
    throw ParameterError(fmt::format("sample_dictionary: need n >= 1 and K >= 1, got n={} K={}", n, atoms));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Dictionary d(n, atoms);
  for (Eigen::Index k = 0; k < atoms; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) d(i, k) = normal(rng);
  }
  return project_columns_to_sphere(std::move(d));
}

/// Starts from the zero (N-n+1) x K matrix and adds 1 to `sparsity`
/// independently uniform coordinates (with replacement).
inline EncodingMatrix sample_encoding(Eigen::Index length, Eigen::Index n, Eigen::Index atoms,
                                      std::int64_t sparsity, Engine& rng) {
  if (length < n || n < 1) {
    throw DimensionError(fmt::format("sample_encoding: need N >= n >= 1, got N={} n={}", length, n));
  }
  if (atoms < 1) throw ParameterError("sample_encoding: need K >= 1");
  if (sparsity < 0) throw ParameterError(fmt::format("sample_encoding: sparsity must be >= 0, got {}", sparsity));
  EncodingMatrix r = EncodingMatrix::Zero(length - n + 1, atoms);
  std::uniform_int_distribution<Eigen::Index> coordinate(0, r.size() - 1);
  for (std::int64_t s = 0; s < sparsity; ++s) r.data()[coordinate(rng)] += 1.0;
  return r;
}

inline Signal sample_noise(Eigen::Index length, const NoiseModel& model, Engine& rng) {
  if (length < 1) throw DimensionError("sample_noise: need N >= 1");
  model.validate();
  Signal eps(length);
  switch (model.kind) {
    case NoiseKind::iid_gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < length; ++i) eps(i) = model.sigma * normal(rng);
      break;
    }
    case NoiseKind::correlated_gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      eps.setConstant(model.sigma * normal(rng));
      break;
    }
    case NoiseKind::generalized_pareto: {
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      std::bernoulli_distribution sign;
      for (Eigen::Index i = 0; i < length; ++i) {
        const double magnitude = gp_magnitude(uniform(rng), model);
        eps(i) = sign(rng) ? magnitude : -magnitude;
      }
      break;
    }
  }
  return eps;
}

struct InstanceParams {
  Eigen::Index length = 1000;
  Eigen::Index atom_length = 10;
  Eigen::Index atoms = 5;
  std::int64_t sparsity = 100;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

/// A draw from the TLGM. `noise` is stored as Y - X so that the identity
/// Y - X = noise holds bit-for-bit.
struct PlantedInstance {
  EncodingMatrix encoding;
  Dictionary dictionary;
  Signal clean;
  Signal observed;
  Signal noise;
  InstanceParams params;
};

inline PlantedInstance plant_instance(const InstanceParams& params) {
  if (params.atom_length < 1 || params.length < params.atom_length) {
    throw DimensionError(
        fmt::format("plant_instance: need N >= n >= 1, got N={} n={}", params.length, params.atom_length));
  }
  if (params.atoms < 1) throw ParameterError("plant_instance: need K >= 1");
  params.noise.validate();

  Engine rng = make_engine(params.seed);
  PlantedInstance inst;
  inst.params = params;
  inst.dictionary = sample_dictionary(params.atom_length, params.atoms, rng);
  inst.encoding = sample_encoding(params.length, params.atom_length, params.atoms, params.sparsity, rng);
  inst.clean = multi_convolve(inst.encoding, inst.dictionary);
  inst.observed = inst.clean + sample_noise(params.length, params.noise, rng);
  inst.noise = inst.observed - inst.clean;
  return inst;
}

}  // namespace csdl
