#pragma once

// Euclidean projections used by the alternating solver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "csdl/errors.hpp"
#include "csdl/tensor_ops.hpp"

namespace csdl {

/// Normalizes every column to unit L2 norm. A zero column has no unique
/// projection and is mapped to the first canonical basis vector.
template <typename Scalar>
MatrixT<Scalar> project_columns_to_sphere(MatrixT<Scalar> d) {
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    Scalar norm = d.col(k).norm();
    if (std::isinf(norm)) norm = d.col(k).stableNorm();
    if (norm > Scalar(0)) {
      d.col(k) /= norm;
    } else {
      d.col(k).setZero();
      d(0, k) = Scalar(1);
    }
  }
  return d;
}

/// Euclidean projection onto {M >= 0, ||M||_{1,1} <= radius}.
///
/// Negatives are clipped first; if the clipped mass exceeds the radius a
/// single water-filling threshold tau is subtracted from every entry of the
/// flattened matrix, with tau chosen so that sum(max(v - tau, 0)) = radius.
/// tau is located exactly by sorting (O(m log m)).
template <typename Scalar>
MatrixT<Scalar> project_nonneg_l11_ball(MatrixT<Scalar> r, std::type_identity_t<Scalar> radius) {
  if (!(radius >= Scalar(0))) {
    throw ParameterError(fmt::format("project_nonneg_l11_ball: radius must be >= 0, got {}", radius));
  }
  r = r.cwiseMax(Scalar(0));
  if (radius == Scalar(0)) {
    r.setZero();
    return r;
  }
  // Points inside the ball up to rounding of the sum are returned as is.
  if (r.sum() <= radius * (Scalar(1) + Scalar(16) * std::numeric_limits<Scalar>::epsilon())) return r;

  std::vector<Scalar> sorted;
  sorted.reserve(static_cast<std::size_t>(r.size()));
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r.data()[i] > Scalar(0)) sorted.push_back(r.data()[i]);
  }
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());

  Scalar cumulative = 0;
  Scalar tau = 0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const Scalar candidate = (cumulative - radius) / static_cast<Scalar>(j + 1);
    if (sorted[j] > candidate) {
      tau = candidate;
    } else {
      break;
    }
  }
  MatrixT<Scalar> out = (r.array() - tau).cwiseMax(Scalar(0)).matrix();
  // Rounding in the threshold can leave the mass a few ulps above the
  // radius; raise tau until the result is feasible as summed.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Scalar excess = out.sum() - radius;
    if (excess <= Scalar(0)) break;
    const auto active = static_cast<Scalar>(std::max<Eigen::Index>((out.array() > Scalar(0)).count(), 1));
    tau = std::max(std::nextafter(tau, std::numeric_limits<Scalar>::infinity()), tau + excess / active);
    out = (r.array() - tau).cwiseMax(Scalar(0)).matrix();
  }
  return out;
}

/// Proximal operator of threshold * ||.||_{1,1} plus the nonnegativity
/// indicator: entrywise max(v - threshold, 0).
template <typename Scalar>
MatrixT<Scalar> prox_nonneg_l1(const MatrixT<Scalar>& r, std::type_identity_t<Scalar> threshold) {
  if (!(threshold >= Scalar(0))) {
    throw ParameterError(fmt::format("prox_nonneg_l1: threshold must be >= 0, got {}", threshold));
  }
  return (r.array() - threshold).cwiseMax(Scalar(0)).matrix();
}

}  // namespace csdl
