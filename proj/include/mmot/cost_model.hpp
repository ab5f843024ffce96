#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "mmot/errors.hpp"

namespace mmot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the product space: one coordinate vector per marginal.
using Point = std::vector<Vector>;

/// c = h(sum_i x_i) with h(s) = 1/2 s'Qs + b's + offset.
struct SumFunction {
  Matrix Q;
  Vector b;
  double offset = 0.0;
};

/// c = sum_{i<j} a_ij x_i'x_j. Only the strict upper triangle of `coefficients` is read.
struct Bilinear {
  Matrix coefficients;
};

/// c = -det[x_1 ... x_n] with m = n.
struct NegDeterminant {};

/// c = min_y sum_i 1/2 (x_i - y)' P_i (x_i - y), each P_i symmetric positive definite.
struct Hedonic {
  std::vector<Matrix> P;
};

/// Values on a tensor grid with one axis per scalar coordinate (flattened marginal order),
/// stored row-major with the last axis fastest. Evaluated by multilinear interpolation.
struct Tabulated {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
};

/// Arbitrary evaluator; cross-Hessians are taken by finite differences.
struct External {
  std::function<double(const Point&)> evaluator;
  std::string label = "external";
};

class CostSpec {
 public:
  using Kind = std::variant<SumFunction, Bilinear, NegDeterminant, Hedonic, Tabulated, External>;

  static CostSpec sum_function(int m, Matrix Q, Vector b = Vector(), double offset = 0.0);
  static CostSpec bilinear(std::vector<int> dims, Matrix coefficients);
  static CostSpec neg_determinant(int n);
  static CostSpec hedonic(std::vector<Matrix> P);
  static CostSpec tabulated(std::vector<int> dims, std::vector<std::vector<double>> axes, std::vector<double> values);
  static CostSpec external(std::vector<int> dims, std::function<double(const Point&)> evaluator,
                           std::string label = "external");

  /// Returns a copy with sum_i linear[i]'x_i + constant added. Cross-Hessians are unchanged.
  CostSpec with_affine_shift(std::vector<Vector> linear, double constant = 0.0) const;

  int marginals() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  int total_dim() const;
  const Kind& kind() const { return kind_; }

  bool is_builtin() const;
  bool has_analytic_cross_hessian() const { return is_builtin(); }
  std::string name() const;

  const std::vector<Vector>& affine_linear() const { return affine_linear_; }
  double affine_constant() const { return affine_constant_; }

 private:
  CostSpec(std::vector<int> dims, Kind kind);

  std::vector<int> dims_;
  Kind kind_;
  std::vector<Vector> affine_linear_;
  double affine_constant_ = 0.0;
};

/// Throws InputError unless x has one vector per marginal of the right length.
void check_point(const CostSpec& cost, const Point& x);

Vector flatten(const Point& x);
Point unflatten(const std::vector<int>& dims, const Eigen::Ref<const Vector>& y);
std::vector<int> block_offsets(const std::vector<int>& dims);

double evaluate(const CostSpec& cost, const Point& x);

struct HedonicMinimizer {
  Vector y;
  double value = 0.0;
  double gradient_norm = 0.0;
};

/// Closed-form minimizer y* = (sum P_i)^{-1} sum P_i x_i of the quadratic hedonic objective.
HedonicMinimizer hedonic_inner_minimize(const std::vector<Matrix>& P, const Point& x);

enum class DerivativeMethod { automatic, analytic, finite_difference };

struct FiniteDifferenceOptions {
  /// Step for coordinate t is relative_step * max(1, |t|).
  double relative_step = 1.220703125e-4;  // eps^(1/4)
};

struct CrossHessianBlock {
  int i = 0;
  int j = 0;
  Matrix entries;
  bool analytic = true;
  double fd_step = 0.0;        // largest step used, 0 for analytic
  double skew_residual = 0.0;  // max |B_ij - B_ji'| before symmetrization
};

/// D^2_{x_i x_j} c at x, an n_i x n_j matrix averaged with the transpose of the (j,i) block.
CrossHessianBlock cross_hessian_block(const CostSpec& cost, const Point& x, int i, int j,
                                      DerivativeMethod method = DerivativeMethod::automatic,
                                      const FiniteDifferenceOptions& fd = {});

}  // namespace mmot
