#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mmot/errors.hpp"

namespace mmot {

/// (+,-,0) inertia of a symmetric form together with the cutoff that produced it.
struct Signature {
  int q_plus = 0;
  int q_minus = 0;
  int q_zero = 0;
  double zero_tol = 0.0;
  std::vector<double> eigenvalues;  // ascending

  int dimension() const { return q_plus + q_minus + q_zero; }

  bool same_counts(const Signature& other) const {
    return q_plus == other.q_plus && q_minus == other.q_minus && q_zero == other.q_zero;
  }
};

/// Scale-aware cutoff N * ||M||_2 * 1e-12.
template <typename Derived>
typename Derived::RealScalar default_zero_tol(const Eigen::MatrixBase<Derived>& eigenvalues) {
  using Real = typename Derived::RealScalar;
  if (eigenvalues.size() == 0) return Real(0);
  return static_cast<Real>(eigenvalues.size()) * eigenvalues.cwiseAbs().maxCoeff() * Real(1e-12);
}

/// Counts eigenvalues of the symmetric matrix M above +tol, below -tol and in between.
/// A negative `zero_tol` selects the default cutoff.
template <typename Derived>
Signature signature(const Eigen::MatrixBase<Derived>& M, double zero_tol = -1.0) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M.rows() != M.cols()) throw InputError("signature: matrix must be square");

  Signature s;
  if (M.rows() == 0) return s;
  const Dense sym = (M + M.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Dense> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("signature: eigensolver failed");
  const auto& values = solver.eigenvalues();

  s.zero_tol = zero_tol >= 0.0 ? zero_tol : static_cast<double>(default_zero_tol(values));
  s.eigenvalues.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double v = static_cast<double>(values(k));
    s.eigenvalues.push_back(v);
    if (v > s.zero_tol) {
      ++s.q_plus;
    } else if (v < -s.zero_tol) {
      ++s.q_minus;
    } else {
      ++s.q_zero;
    }
  }
  return s;
}

/// Numerical rank: singular values above rel_tol times the largest.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& A, double rel_tol = 1e-10) {
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Dense> svd(A.eval());
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

/// 2-norm condition number; infinity for singular or empty input.
template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& A) {
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.size() == 0) return INFINITY;
  Eigen::JacobiSVD<Dense> svd(A.eval());
  const auto& sv = svd.singularValues();
  const double smallest = static_cast<double>(sv(sv.size() - 1));
  if (smallest == 0.0) return INFINITY;
  return static_cast<double>(sv(0)) / smallest;
}

}  // namespace mmot
