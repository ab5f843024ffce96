#pragma once

// Reference computations that share no code with the library: a cyclic Jacobi eigensolver,
// a dense-tableau simplex and exhaustive searches. Tests compare the library against these.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline std::vector<double> jacobi_eigenvalues(Matrix A) {
  const Eigen::Index n = A.rows();
  A = (A + A.transpose()) / 2.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    }
    if (off < 1e-30 * std::max(1.0, A.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p);
          const double akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k);
          const double aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = A(k, k);
  std::sort(out.begin(), out.end());
  return out;
}

/// (+, -, 0) counts with cutoff rel_tol * N * max |lambda|.
inline std::array<int, 3> inertia(const Matrix& A, double rel_tol = 1e-12) {
  const auto ev = jacobi_eigenvalues(A);
  double scale = 0.0;
  for (double v : ev) scale = std::max(scale, std::abs(v));
  const double tol = rel_tol * static_cast<double>(ev.size()) * scale;
  std::array<int, 3> out{0, 0, 0};
  for (double v : ev) {
    if (v > tol) {
      ++out[0];
    } else if (v < -tol) {
      ++out[1];
    } else {
      ++out[2];
    }
  }
  return out;
}

/// Rank by Gaussian elimination with full pivoting.
inline int rank(Matrix A, double rel_tol = 1e-10) {
  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  int r = 0;
  const Eigen::Index rows = A.rows();
  const Eigen::Index cols = A.cols();
  for (Eigen::Index step = 0; step < std::min(rows, cols); ++step) {
    Eigen::Index pr = step;
    Eigen::Index pc = step;
    double best = 0.0;
    for (Eigen::Index i = step; i < rows; ++i) {
      for (Eigen::Index j = step; j < cols; ++j) {
        if (std::abs(A(i, j)) > best) {
          best = std::abs(A(i, j));
          pr = i;
          pc = j;
        }
      }
    }
    if (best <= rel_tol * scale) break;
    A.row(step).swap(A.row(pr));
    A.col(step).swap(A.col(pc));
    for (Eigen::Index i = step + 1; i < rows; ++i) A.row(i) -= (A(i, step) / A(step, step)) * A.row(step);
    ++r;
  }
  return r;
}

/// Minimize c'x subject to A x = b, x >= 0 with a dense tableau, two phases and Bland's rule.
struct LpResult {
  double objective = 0.0;
  std::vector<double> x;
};

inline LpResult tableau_simplex(const Matrix& A, const Vector& b, const Vector& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  // Columns: n structural, m artificial, then the right-hand side.
  Matrix T = Matrix::Zero(m + 1, n + m + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    T.block(i, 0, 1, n) = sign * A.row(i);
    T(i, n + i) = 1.0;
    T(i, n + m) = sign * b(i);
    basis[static_cast<std::size_t>(i)] = n + i;
  }
  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    T.row(row) /= T(row, col);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != row && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  };
  auto run = [&](Eigen::Index allowed) {
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (T(m, j) < -1e-11) {
          col = j;
          break;
        }
      }
      if (col < 0) return;
      Eigen::Index row = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (T(i, col) <= 1e-11) continue;
        const double ratio = T(i, n + m) / T(i, col);
        if (row < 0 || ratio < best - 1e-13 ||
            (ratio <= best + 1e-13 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(row)])) {
          row = i;
          best = ratio;
        }
      }
      if (row < 0) throw std::runtime_error("oracle: unbounded");
      pivot(row, col);
    }
    throw std::runtime_error("oracle: iteration limit");
  };
  // Phase 1: minimize the sum of artificials.
  T.row(m).setZero();
  for (Eigen::Index i = 0; i < m; ++i) T.row(m) -= T.row(i);
  for (Eigen::Index i = 0; i < m; ++i) T(m, n + i) = 0.0;
  run(n + m);
  if (-T(m, n + m) > 1e-9) throw std::runtime_error("oracle: infeasible");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(T(i, j)) > 1e-9) {
        pivot(i, j);
        break;
      }
    }
  }
  // Phase 2 over structural columns; artificials left basic sit on redundant rows at zero.
  T.row(m).setZero();
  T.block(m, 0, 1, n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<std::size_t>(i)];
    if (j < n && c(j) != 0.0) T.row(m) -= c(j) * T.row(i);
  }
  run(n);
  LpResult out;
  out.x.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<std::size_t>(i)];
    if (j < n) out.x[static_cast<std::size_t>(j)] = T(i, n + m);
  }
  for (Eigen::Index j = 0; j < n; ++j) out.objective += c(j) * out.x[static_cast<std::size_t>(j)];
  return out;
}

/// Full (unreduced) multi-marginal constraint system on index tuples, last index fastest.
inline void marginal_system(const std::vector<std::vector<double>>& weights, Matrix& A, Vector& b) {
  std::vector<int> sizes;
  for (const auto& w : weights) sizes.push_back(static_cast<int>(w.size()));
  int vars = 1;
  int rows = 0;
  for (int s : sizes) {
    vars *= s;
    rows += s;
  }
  A = Matrix::Zero(rows, vars);
  b = Vector::Zero(rows);
  int offset = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (int k = 0; k < sizes[i]; ++k) b(offset + k) = weights[i][static_cast<std::size_t>(k)];
    offset += sizes[i];
  }
  for (int v = 0; v < vars; ++v) {
    int rest = v;
    std::vector<int> idx(sizes.size());
    for (std::size_t i = sizes.size(); i-- > 0;) {
      idx[i] = rest % sizes[i];
      rest /= sizes[i];
    }
    int off = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      A(off + idx[i], v) = 1.0;
      off += sizes[i];
    }
  }
}

/// Two marginals with k equally weighted points: the optimum is attained at a permutation (Birkhoff).
inline double best_permutation_cost(const Matrix& C) {
  const int k = static_cast<int>(C.rows());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (int a = 0; a < k; ++a) s += C(a, perm[static_cast<std::size_t>(a)]);
    best = std::min(best, s / k);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Minimizes f over a regular grid on [lo, hi]^dim, then refines around the best point.
inline Vector grid_minimize(const std::function<double(const Vector&)>& f, int dim, double lo, double hi) {
  Vector center = Vector::Constant(dim, (lo + hi) / 2.0);
  double half = (hi - lo) / 2.0;
  for (int level = 0; level < 40; ++level) {
    const int steps = 20;
    Vector best = center;
    double best_value = f(center);
    std::vector<int> counter(static_cast<std::size_t>(dim), 0);
    while (true) {
      Vector y(dim);
      for (int d = 0; d < dim; ++d) y(d) = center(d) - half + 2.0 * half * counter[static_cast<std::size_t>(d)] / steps;
      const double v = f(y);
      if (v < best_value) {
        best_value = v;
        best = y;
      }
      int d = 0;
      while (d < dim && ++counter[static_cast<std::size_t>(d)] > steps) counter[static_cast<std::size_t>(d++)] = 0;
      if (d == dim) break;
    }
    center = best;
    half *= 0.25;
  }
  return center;
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) A(r, c) = g(rng);
  }
  return (A + A.transpose()) / 2.0;
}

/// Random symmetric matrix with prescribed numbers of positive and negative eigenvalues.
inline Matrix random_with_inertia(std::mt19937_64& rng, int n, int plus, int minus) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  Vector d = Vector::Zero(n);
  for (int k = 0; k < plus; ++k) d(k) = mag(rng);
  for (int k = plus; k < plus + minus; ++k) d(k) = -mag(rng);
  Eigen::HouseholderQR<Matrix> qr(random_symmetric(rng, n) + Matrix::Identity(n, n) * 0.1);
  const Matrix Q = qr.householderQ();
  return Q * d.asDiagonal() * Q.transpose();
}

/// Random invertible matrix with 2-norm condition number at most `max_condition`.
inline Matrix random_congruence(std::mt19937_64& rng, int n, double max_condition) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::HouseholderQR<Matrix> q1(random_symmetric(rng, n) + Matrix::Identity(n, n));
  Eigen::HouseholderQR<Matrix> q2(random_symmetric(rng, n) - Matrix::Identity(n, n));
  Vector s(n);
  const double log_max = std::log(max_condition);
  for (int k = 0; k < n; ++k) s(k) = std::exp(u(rng) * log_max);
  s(0) = 1.0;
  return Matrix(q1.householderQ()) * s.asDiagonal() * Matrix(q2.householderQ());
}

}  // namespace oracle
