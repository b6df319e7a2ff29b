#pragma once

// Multi-convolution and its adjoint, L_{p,q} matrix norms, and the
// banded convolution matrix used as a reference in tests.
//
// Shapes follow the TLGM convention: an encoding R is (N-n+1) x K, a
// dictionary D is n x K, and R (x) D = sum_k R_k * D_k has length N.
// Convolution is always "full" mode and indices are zero-based.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "csdl/errors.hpp"

namespace csdl {

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense real signal of length N (Y, X, noise, reconstructions).
using Signal = VectorT<double>;
/// (N-n+1) x K encoding, nonnegative on the feasible set.
using EncodingMatrix = MatrixT<double>;
/// n x K dictionary, one atom per column.
using Dictionary = MatrixT<double>;
using Matrix = MatrixT<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
  return a.derived().array().isFinite().all();
}

}  // namespace detail

/// Length of R (x) D given the number of rows of R and of D.
constexpr std::ptrdiff_t signal_length(std::ptrdiff_t encoding_rows, std::ptrdiff_t atom_length) {
  return encoding_rows + atom_length - 1;
}

/// X = sum_k full_conv(R_k, D_k). Zero entries of R are skipped, so the cost
/// is proportional to the number of nonzero encoding coefficients.
template <typename Scalar>
VectorT<Scalar> multi_convolve(const MatrixT<Scalar>& encoding, const MatrixT<Scalar>& dictionary) {
  if (encoding.cols() != dictionary.cols()) {
    throw DimensionError(fmt::format("multi_convolve: encoding has {} columns, dictionary has {}",
                                     encoding.cols(), dictionary.cols()));
  }
  if (encoding.rows() < 1 || dictionary.rows() < 1) {
    throw DimensionError("multi_convolve: empty encoding or dictionary");
  }
  const auto rows = encoding.rows();
  const auto atom = dictionary.rows();
  VectorT<Scalar> out = VectorT<Scalar>::Zero(signal_length(rows, atom));
  for (Eigen::Index k = 0; k < encoding.cols(); ++k) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Scalar r = encoding(i, k);
      if (r == Scalar(0)) continue;
      out.segment(i, atom).noalias() += r * dictionary.col(k);
    }
  }
  return out;
}

/// Valid cross-correlation: out[j] = sum_m signal[j+m] * kernel[m], of length
/// len(signal) - len(kernel) + 1. This is the transpose of the convolution
/// matrix of `kernel` applied to `signal`.
template <typename Scalar, typename SignalDerived, typename KernelDerived>
VectorT<Scalar> valid_correlate_impl(const Eigen::MatrixBase<SignalDerived>& signal,
                                     const Eigen::MatrixBase<KernelDerived>& kernel) {
  const auto length = signal.size();
  const auto width = kernel.size();
  if (width < 1 || width > length) {
    throw DimensionError(fmt::format("valid_correlate: kernel length {} incompatible with signal length {}",
                                     width, length));
  }
  const auto out_len = length - width + 1;
  VectorT<Scalar> out = VectorT<Scalar>::Zero(out_len);
  if (width <= out_len) {
    // out = sum_m kernel[m] * signal[m : m + out_len]
    for (Eigen::Index m = 0; m < width; ++m) {
      const Scalar w = kernel(m);
      if (w == Scalar(0)) continue;
      out.noalias() += w * signal.segment(m, out_len);
    }
  } else {
    for (Eigen::Index j = 0; j < out_len; ++j) {
      out(j) = signal.segment(j, width).dot(kernel);
    }
  }
  return out;
}

template <typename SignalDerived, typename KernelDerived>
auto valid_correlate(const Eigen::MatrixBase<SignalDerived>& signal,
                     const Eigen::MatrixBase<KernelDerived>& kernel) {
  using Scalar = typename SignalDerived::Scalar;
  return valid_correlate_impl<Scalar>(signal, kernel);
}

/// p-norm of a vector with the limit conventions p = 0 (count of nonzeros)
/// and p = inf (max absolute value).
template <typename Derived>
double vector_p_norm(const Eigen::MatrixBase<Derived>& v, double p) {
  if (p == 0.0) return static_cast<double>((v.array() != 0).count());
  if (std::isinf(p)) return v.size() == 0 ? 0.0 : static_cast<double>(v.cwiseAbs().maxCoeff());
  if (p == 1.0) return static_cast<double>(v.cwiseAbs().sum());
  if (p == 2.0) return static_cast<double>(v.norm());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(static_cast<double>(v(i))), p);
  return std::pow(acc, 1.0 / p);
}

/// ||A||_{p,q}: the q-norm of the vector of column p-norms. p and q range over
/// [0, inf], with 0 counting nonzeros and inf taking the maximum.
template <typename Derived>
double lpq_norm(const Eigen::MatrixBase<Derived>& a, double p, double q) {
  if (!(p >= 0.0) || !(q >= 0.0)) {
    throw ParameterError(fmt::format("lpq_norm: exponents must lie in [0, inf], got p={} q={}", p, q));
  }
  if (!detail::all_finite(a)) throw InputError("lpq_norm: matrix has non-finite entries");
  Eigen::VectorXd column_norms(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) column_norms(j) = vector_p_norm(a.col(j), p);
  return vector_p_norm(column_norms, q);
}

/// Length-N convolution matrix of `source`: N x (N-n+1), entry (i,j) equals
/// source[i-j] when 0 <= i-j < n. Dense; intended for verification only.
template <typename Derived>
MatrixT<typename Derived::Scalar> convolution_matrix(const Eigen::MatrixBase<Derived>& source,
                                                     Eigen::Index target_length) {
  using Scalar = typename Derived::Scalar;
  const auto n = source.size();
  if (n < 1 || target_length < n) {
    throw DimensionError(fmt::format("convolution_matrix: source length {} exceeds target length {}", n,
                                     target_length));
  }
  const auto cols = target_length - n + 1;
  MatrixT<Scalar> t = MatrixT<Scalar>::Zero(target_length, cols);
  for (Eigen::Index j = 0; j < cols; ++j) t.col(j).segment(j, n) = source;
  return t;
}

/// Squared-error objective ||Y - R (x) D||^2 with its gradients in R and D.
struct ObjectiveGradients {
  double objective = 0.0;
  Matrix grad_encoding;
  Matrix grad_dictionary;
};

inline void check_tlgm_shapes(const Signal& y, const Matrix& encoding, const Matrix& dictionary,
                              const char* where) {
  if (encoding.cols() != dictionary.cols() ||
      y.size() != signal_length(encoding.rows(), dictionary.rows())) {
    throw DimensionError(fmt::format("{}: len(Y)={} but R is {}x{} and D is {}x{}", where, y.size(),
                                     encoding.rows(), encoding.cols(), dictionary.rows(), dictionary.cols()));
  }
}

/// Gradient of ||Y - R (x) D||^2 in R, given the residual E = R (x) D - Y.
inline Matrix encoding_gradient(const Signal& residual, const Matrix& dictionary) {
  Matrix g(residual.size() - dictionary.rows() + 1, dictionary.cols());
  for (Eigen::Index k = 0; k < dictionary.cols(); ++k) g.col(k) = 2.0 * valid_correlate(residual, dictionary.col(k));
  return g;
}

/// Gradient of ||Y - R (x) D||^2 in D, given the residual E = R (x) D - Y.
/// Only nonzero encoding entries contribute.
inline Matrix dictionary_gradient(const Signal& residual, const Matrix& encoding) {
  const auto atom = residual.size() - encoding.rows() + 1;
  Matrix g = Matrix::Zero(atom, encoding.cols());
  for (Eigen::Index k = 0; k < encoding.cols(); ++k) {
    for (Eigen::Index i = 0; i < encoding.rows(); ++i) {
      const double r = encoding(i, k);
      if (r == 0.0) continue;
      g.col(k).noalias() += (2.0 * r) * residual.segment(i, atom);
    }
  }
  return g;
}

inline ObjectiveGradients objective_and_gradients(const Signal& y, const Matrix& encoding,
                                                  const Matrix& dictionary) {
  check_tlgm_shapes(y, encoding, dictionary, "objective_and_gradients");
  const Signal residual = multi_convolve(encoding, dictionary) - y;
  return {residual.squaredNorm(), encoding_gradient(residual, dictionary),
          dictionary_gradient(residual, encoding)};
}

}  // namespace csdl
