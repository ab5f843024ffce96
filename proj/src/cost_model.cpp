#include "mmot/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_symmetric(const Matrix& A, double tol = 1e-12) {
  if (A.rows() != A.cols()) return false;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double pair_coefficient(const Bilinear& c, int i, int j) {
  return i < j ? c.coefficients(i, j) : c.coefficients(j, i);
}

// Columns x_1..x_n as an n x n matrix.
Matrix column_matrix(const Point& x) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix X(n, n);
  for (Eigen::Index k = 0; k < n; ++k) X.col(k) = x[static_cast<std::size_t>(k)];
  return X;
}

double interpolate(const Tabulated& t, const Vector& y) {
  const std::size_t dims = t.axes.size();
  std::vector<std::size_t> lower(dims);
  std::vector<double> frac(dims);
  std::vector<std::size_t> stride(dims, 1);
  for (std::size_t d = dims; d-- > 1;) stride[d - 1] = stride[d] * t.axes[d].size();

  for (std::size_t d = 0; d < dims; ++d) {
    const auto& axis = t.axes[d];
    const double v = y(static_cast<Eigen::Index>(d));
    if (v < axis.front() || v > axis.back()) {
      std::ostringstream msg;
      msg << "tabulated cost: coordinate " << d << " = " << v << " outside [" << axis.front() << ", " << axis.back()
          << "]";
      throw InputError(msg.str());
    }
    if (axis.size() == 1) {
      lower[d] = 0;
      frac[d] = 0.0;
      continue;
    }
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t k = static_cast<std::size_t>(std::distance(axis.begin(), it));
    k = std::clamp<std::size_t>(k, 1, axis.size() - 1) - 1;
    lower[d] = k;
    frac[d] = (v - axis[k]) / (axis[k + 1] - axis[k]);
  }

  double value = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << dims); ++corner) {
    double weight = 1.0;
    std::size_t offset = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const bool upper = (corner >> d) & 1U;
      if (upper && t.axes[d].size() == 1) {
        weight = 0.0;
        break;
      }
      weight *= upper ? frac[d] : 1.0 - frac[d];
      offset += (lower[d] + (upper ? 1 : 0)) * stride[d];
    }
    if (weight != 0.0) value += weight * t.values[offset];
  }
  return value;
}

Matrix analytic_block(const CostSpec& cost, const Point& x, int i, int j) {
  const int ni = cost.dim(i);
  const int nj = cost.dim(j);
  return std::visit(
      overloaded{
          [&](const SumFunction& s) -> Matrix { return s.Q; },
          [&](const Bilinear& b) -> Matrix { return pair_coefficient(b, i, j) * Matrix::Identity(ni, nj); },
          [&](const NegDeterminant&) -> Matrix {
            // d^2 det / dX(a,i) dX(b,j) is the determinant with column i := e_a, column j := e_b.
            const Matrix X = column_matrix(x);
            Matrix block(ni, nj);
            for (int a = 0; a < ni; ++a) {
              for (int b = 0; b < nj; ++b) {
                Matrix Y = X;
                Y.col(i) = Vector::Unit(ni, a);
                Y.col(j) = Vector::Unit(nj, b);
                block(a, b) = -Y.determinant();
              }
            }
            return block;
          },
          [&](const Hedonic& h) -> Matrix {
            // Envelope: D_{x_i} c = P_i (x_i - y*), D_{x_j} y* = M^{-1} P_j.
            Matrix M = Matrix::Zero(ni, ni);
            for (const auto& P : h.P) M += P;
            Eigen::LDLT<Matrix> ldlt(M);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
              throw NumericalError("hedonic: sum of P_i is not positive definite");
            }
            const auto& Pi = h.P[static_cast<std::size_t>(i)];
            const auto& Pj = h.P[static_cast<std::size_t>(j)];
            return -Pi * ldlt.solve(Pj);
          },
          [&](const Tabulated&) -> Matrix {
            throw UnsupportedError("cross-Hessians are not defined for tabulated costs");
          },
          [&](const External&) -> Matrix { throw UnsupportedError("external costs have no analytic cross-Hessian"); },
      },
      cost.kind());
}

// Four-point central difference for every (a, b) coordinate pair of marginals (i, j).
double evaluate_unshifted(const CostSpec& cost, const Point& x);

// The affine shift is separable, so its mixed partials vanish and it is left out of the differences.
Matrix fd_block(const CostSpec& cost, const Point& x, int i, int j, const FiniteDifferenceOptions& fd,
                double& max_step) {
  const int ni = cost.dim(i);
  const int nj = cost.dim(j);
  auto step_for = [&](double t) {
    const double h = fd.relative_step * std::max(1.0, std::abs(t));
    const double effective = (t + h) - t;
    if (!(effective > 0.0) || !std::isfinite(effective)) {
      std::ostringstream msg;
      msg << "finite-difference step underflow at coordinate " << t;
      throw NumericalError(msg.str());
    }
    return effective;
  };

  Matrix block(ni, nj);
  Point p = x;
  auto& xi = p[static_cast<std::size_t>(i)];
  auto& xj = p[static_cast<std::size_t>(j)];
  const auto& xi0 = x[static_cast<std::size_t>(i)];
  const auto& xj0 = x[static_cast<std::size_t>(j)];
  for (int a = 0; a < ni; ++a) {
    const double ha = step_for(xi0(a));
    for (int b = 0; b < nj; ++b) {
      const double hb = step_for(xj0(b));
      max_step = std::max({max_step, ha, hb});
      auto f = [&](double sa, double sb) {
        xi(a) = xi0(a) + sa * ha;
        xj(b) = xj0(b) + sb * hb;
        const double v = evaluate_unshifted(cost, p);
        xi(a) = xi0(a);
        xj(b) = xj0(b);
        return v;
      };
      block(a, b) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * ha * hb);
    }
  }
  return block;
}

}  // namespace

CostSpec::CostSpec(std::vector<int> dims, Kind kind) : dims_(std::move(dims)), kind_(std::move(kind)) {
  if (dims_.size() < 2) throw InputError("a cost needs at least 2 marginals");
  for (int n : dims_) {
    if (n < 1) throw InputError("every marginal dimension must be positive");
  }
}

CostSpec CostSpec::sum_function(int m, Matrix Q, Vector b, double offset) {
  if (Q.rows() == 0 || !is_symmetric(Q)) throw InputError("sum_function: Q must be square and symmetric");
  const auto n = Q.rows();
  if (b.size() == 0) b = Vector::Zero(n);
  if (b.size() != n) throw InputError("sum_function: b must have the dimension of Q");
  return CostSpec(std::vector<int>(static_cast<std::size_t>(m), static_cast<int>(n)),
                  SumFunction{std::move(Q), std::move(b), offset});
}

CostSpec CostSpec::bilinear(std::vector<int> dims, Matrix coefficients) {
  const auto m = static_cast<Eigen::Index>(dims.size());
  if (coefficients.rows() != m || coefficients.cols() != m) {
    throw InputError("bilinear: coefficient matrix must be m x m");
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    for (std::size_t j = i + 1; j < dims.size(); ++j) {
      if (dims[i] != dims[j] && coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        throw InputError("bilinear: coupled marginals must have matching dimensions");
      }
    }
  }
  return CostSpec(std::move(dims), Bilinear{std::move(coefficients)});
}

CostSpec CostSpec::neg_determinant(int n) {
  if (n < 2) throw InputError("neg_determinant: need m = n >= 2");
  return CostSpec(std::vector<int>(static_cast<std::size_t>(n), n), NegDeterminant{});
}

CostSpec CostSpec::hedonic(std::vector<Matrix> P) {
  if (P.size() < 2) throw InputError("hedonic: need at least 2 marginals");
  const auto n = P.front().rows();
  for (const auto& Pi : P) {
    if (Pi.rows() != n || !is_symmetric(Pi)) throw InputError("hedonic: P_i must be symmetric n x n");
    Eigen::LLT<Matrix> llt(Pi);
    if (llt.info() != Eigen::Success) throw InputError("hedonic: P_i must be positive definite");
  }
  std::vector<int> dims(P.size(), static_cast<int>(n));
  return CostSpec(std::move(dims), Hedonic{std::move(P)});
}

CostSpec CostSpec::tabulated(std::vector<int> dims, std::vector<std::vector<double>> axes, std::vector<double> values) {
  const int total = std::accumulate(dims.begin(), dims.end(), 0);
  if (static_cast<int>(axes.size()) != total) throw InputError("tabulated: need one axis per coordinate");
  if (total > 16) throw InputError("tabulated: at most 16 coordinates");
  std::size_t count = 1;
  for (const auto& axis : axes) {
    if (axis.empty() || !std::is_sorted(axis.begin(), axis.end()) ||
        std::adjacent_find(axis.begin(), axis.end()) != axis.end()) {
      throw InputError("tabulated: axes must be nonempty and strictly increasing");
    }
    count *= axis.size();
  }
  if (values.size() != count) throw InputError("tabulated: value count does not match the grid");
  return CostSpec(std::move(dims), Tabulated{std::move(axes), std::move(values)});
}

CostSpec CostSpec::external(std::vector<int> dims, std::function<double(const Point&)> evaluator, std::string label) {
  if (!evaluator) throw InputError("external: empty evaluator");
  return CostSpec(std::move(dims), External{std::move(evaluator), std::move(label)});
}

CostSpec CostSpec::with_affine_shift(std::vector<Vector> linear, double constant) const {
  if (linear.size() != dims_.size()) throw InputError("affine shift: one vector per marginal");
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (linear[i].size() != dims_[i]) throw InputError("affine shift: dimension mismatch");
  }
  CostSpec shifted = *this;
  if (shifted.affine_linear_.empty()) {
    shifted.affine_linear_ = std::move(linear);
  } else {
    for (std::size_t i = 0; i < dims_.size(); ++i) shifted.affine_linear_[i] += linear[i];
  }
  shifted.affine_constant_ += constant;
  return shifted;
}

int CostSpec::total_dim() const {
  return std::accumulate(dims_.begin(), dims_.end(), 0);
}

bool CostSpec::is_builtin() const {
  return !std::holds_alternative<Tabulated>(kind_) && !std::holds_alternative<External>(kind_);
}

std::string CostSpec::name() const {
  return std::visit(overloaded{
                        [](const SumFunction&) -> std::string { return "sum_function"; },
                        [](const Bilinear&) -> std::string { return "bilinear"; },
                        [](const NegDeterminant&) -> std::string { return "neg_determinant"; },
                        [](const Hedonic&) -> std::string { return "hedonic"; },
                        [](const Tabulated&) -> std::string { return "tabulated"; },
                        [](const External& e) -> std::string { return e.label; },
                    },
                    kind_);
}

void check_point(const CostSpec& cost, const Point& x) {
  if (static_cast<int>(x.size()) != cost.marginals()) {
    std::ostringstream msg;
    msg << "point has " << x.size() << " components, cost has " << cost.marginals() << " marginals";
    throw InputError(msg.str());
  }
  for (int i = 0; i < cost.marginals(); ++i) {
    if (x[static_cast<std::size_t>(i)].size() != cost.dim(i)) {
      std::ostringstream msg;
      msg << "component " << i + 1 << " has length " << x[static_cast<std::size_t>(i)].size() << ", expected "
          << cost.dim(i);
      throw InputError(msg.str());
    }
  }
}

std::vector<int> block_offsets(const std::vector<int>& dims) {
  std::vector<int> offsets(dims.size() + 1, 0);
  std::partial_sum(dims.begin(), dims.end(), offsets.begin() + 1);
  return offsets;
}

Vector flatten(const Point& x) {
  Eigen::Index total = 0;
  for (const auto& v : x) total += v.size();
  Vector y(total);
  Eigen::Index at = 0;
  for (const auto& v : x) {
    y.segment(at, v.size()) = v;
    at += v.size();
  }
  return y;
}

Point unflatten(const std::vector<int>& dims, const Eigen::Ref<const Vector>& y) {
  const auto offsets = block_offsets(dims);
  if (y.size() != offsets.back()) throw InputError("unflatten: length mismatch");
  Point x;
  x.reserve(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) x.emplace_back(y.segment(offsets[i], dims[i]));
  return x;
}

HedonicMinimizer hedonic_inner_minimize(const std::vector<Matrix>& P, const Point& x) {
  if (P.size() != x.size() || P.empty()) throw InputError("hedonic: one P_i per marginal");
  const auto n = P.front().rows();
  Matrix M = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (x[i].size() != n) throw InputError("hedonic: dimension mismatch");
    M += P[i];
    rhs += P[i] * x[i];
  }
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw NumericalError("hedonic: sum of P_i is singular", {"M = sum P_i has a nonpositive pivot"});
  }
  HedonicMinimizer out;
  out.y = ldlt.solve(rhs);
  Vector gradient = Vector::Zero(n);
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vector d = x[i] - out.y;
    out.value += 0.5 * d.dot(P[i] * d);
    gradient -= P[i] * d;
  }
  out.gradient_norm = gradient.norm();
  return out;
}

namespace {

double evaluate_unshifted(const CostSpec& cost, const Point& x) {
  return std::visit(overloaded{
                        [&](const SumFunction& s) {
                          Vector sum = Vector::Zero(s.Q.rows());
                          for (const auto& xi : x) sum += xi;
                          return 0.5 * sum.dot(s.Q * sum) + s.b.dot(sum) + s.offset;
                        },
                        [&](const Bilinear& b) {
                          double v = 0.0;
                          const int m = cost.marginals();
                          for (int i = 0; i < m; ++i) {
                            for (int j = i + 1; j < m; ++j) {
                              const double a = b.coefficients(i, j);
                              if (a != 0.0) v += a * x[static_cast<std::size_t>(i)].dot(x[static_cast<std::size_t>(j)]);
                            }
                          }
                          return v;
                        },
                        [&](const NegDeterminant&) { return -column_matrix(x).determinant(); },
                        [&](const Hedonic& h) { return hedonic_inner_minimize(h.P, x).value; },
                        [&](const Tabulated& t) { return interpolate(t, flatten(x)); },
                        [&](const External& e) { return e.evaluator(x); },
                    },
                    cost.kind());
}

}  // namespace

double evaluate(const CostSpec& cost, const Point& x) {
  check_point(cost, x);
  double value = evaluate_unshifted(cost, x);
  const auto& linear = cost.affine_linear();
  for (std::size_t i = 0; i < linear.size(); ++i) value += linear[i].dot(x[i]);
  return value + cost.affine_constant();
}

CrossHessianBlock cross_hessian_block(const CostSpec& cost, const Point& x, int i, int j, DerivativeMethod method,
                                      const FiniteDifferenceOptions& fd) {
  check_point(cost, x);
  const int m = cost.marginals();
  if (i < 0 || j < 0 || i >= m || j >= m || i == j) {
    std::ostringstream msg;
    msg << "cross_hessian_block: invalid marginal pair (" << i << ", " << j << ")";
    throw InputError(msg.str());
  }
  if (std::holds_alternative<Tabulated>(cost.kind())) {
    throw UnsupportedError("cross-Hessians are not defined for tabulated costs");
  }
  bool analytic = method == DerivativeMethod::analytic ||
                  (method == DerivativeMethod::automatic && cost.has_analytic_cross_hessian());

  CrossHessianBlock out;
  out.i = i;
  out.j = j;
  out.analytic = analytic;
  Matrix forward;
  Matrix mirror;
  if (analytic) {
    forward = analytic_block(cost, x, i, j);
    mirror = analytic_block(cost, x, j, i);
  } else {
    forward = fd_block(cost, x, i, j, fd, out.fd_step);
    mirror = fd_block(cost, x, j, i, fd, out.fd_step);
  }
  out.skew_residual = (forward - mirror.transpose()).cwiseAbs().maxCoeff();
  out.entries = 0.5 * (forward + mirror.transpose());
  return out;
}

}  // namespace mmot
