#include "mmot/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& options)
      : lp_(lp), options_(options), rows_(lp.rows), cols_(static_cast<int>(lp.columns.size())) {
    if (static_cast<int>(lp.rhs.size()) != rows_ || lp.cost.size() != lp.columns.size()) {
      throw NumericalError("simplex: inconsistent problem dimensions");
    }
    b_ = Eigen::Map<const Eigen::VectorXd>(lp.rhs.data(), rows_);
    if (rows_ > 0 && b_.minCoeff() < 0.0) throw NumericalError("simplex: right-hand side must be nonnegative");
    for (const auto& col : lp.columns) {
      for (int r : col.rows) {
        if (r < 0 || r >= rows_) throw NumericalError("simplex: column row index out of range");
      }
    }
    cost_scale_ = 1.0;
    for (double c : lp.cost) cost_scale_ = std::max(cost_scale_, std::abs(c));
    // Artificial r is encoded as -1 - r, so it sorts before every structural column.
    basis_.resize(static_cast<std::size_t>(rows_));
    for (int r = 0; r < rows_; ++r) basis_[static_cast<std::size_t>(r)] = -1 - r;
    in_basis_.assign(static_cast<std::size_t>(cols_), false);
    binv_ = Eigen::MatrixXd::Identity(rows_, rows_);
    xb_ = b_;
  }

  SimplexResult solve() {
    iterate(/*phase=*/1);
    const double infeasibility = xb_sum_artificial();
    if (infeasibility > options_.tol * std::max(1.0, b_.cwiseAbs().sum())) {
      std::ostringstream msg;
      msg << "simplex: problem is infeasible (phase-1 residual " << infeasibility << ")";
      fail(msg.str());
    }
    drive_out_artificials();
    iterate(/*phase=*/2);
    refactor();

    SimplexResult result;
    result.x.assign(static_cast<std::size_t>(cols_), 0.0);
    for (int r = 0; r < rows_; ++r) {
      const int j = basis_[static_cast<std::size_t>(r)];
      if (j >= 0) result.x[static_cast<std::size_t>(j)] = std::max(0.0, xb_(r));
    }
    const Eigen::VectorXd y = duals(2);
    result.duals.assign(y.data(), y.data() + y.size());
    for (std::size_t j = 0; j < result.x.size(); ++j) result.objective += lp_.cost[j] * result.x[j];
    result.basis = basis_;
    result.pivots = pivots_;
    return result;
  }

 private:
  double cost_of(int j, int phase) const {
    if (j < 0) return phase == 1 ? 1.0 : 0.0;
    return phase == 1 ? 0.0 : lp_.cost[static_cast<std::size_t>(j)];
  }

  Eigen::VectorXd dense_column(int j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(rows_);
    if (j < 0) {
      a(-1 - j) = 1.0;
      return a;
    }
    const auto& col = lp_.columns[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < col.rows.size(); ++k) a(col.rows[k]) += col.values[k];
    return a;
  }

  double dot_column(const Eigen::VectorXd& y, int j) const {
    const auto& col = lp_.columns[static_cast<std::size_t>(j)];
    double s = 0.0;
    for (std::size_t k = 0; k < col.rows.size(); ++k) s += y(col.rows[k]) * col.values[k];
    return s;
  }

  Eigen::VectorXd duals(int phase) const {
    Eigen::VectorXd cb(rows_);
    for (int r = 0; r < rows_; ++r) cb(r) = cost_of(basis_[static_cast<std::size_t>(r)], phase);
    return binv_.transpose() * cb;
  }

  double xb_sum_artificial() const {
    double s = 0.0;
    for (int r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < 0) s += std::abs(xb_(r));
    }
    return s;
  }

  void refactor() {
    if (rows_ == 0) return;
    Eigen::MatrixXd B(rows_, rows_);
    for (int r = 0; r < rows_; ++r) B.col(r) = dense_column(basis_[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) fail("simplex: basis matrix became singular");
    xb_ = binv_ * b_;
    since_refactor_ = 0;
  }

  void pivot(int entering, int row, const Eigen::VectorXd& alpha) {
    const double theta = xb_(row) / alpha(row);
    xb_ -= theta * alpha;
    xb_(row) = theta;
    const Eigen::RowVectorXd pivot_row = binv_.row(row) / alpha(row);
    for (int r = 0; r < rows_; ++r) {
      if (r == row || alpha(r) == 0.0) continue;
      binv_.row(r) -= alpha(r) * pivot_row;
    }
    binv_.row(row) = pivot_row;

    const int leaving = basis_[static_cast<std::size_t>(row)];
    if (leaving >= 0) in_basis_[static_cast<std::size_t>(leaving)] = false;
    in_basis_[static_cast<std::size_t>(entering)] = true;
    basis_[static_cast<std::size_t>(row)] = entering;

    std::ostringstream note;
    note << "pivot " << pivots_ << ": enter " << entering << ", leave " << leaving << ", step " << theta;
    trace_.push_back(note.str());
    if (trace_.size() > 12) trace_.pop_front();

    ++pivots_;
    if (++since_refactor_ >= options_.refactor_every) refactor();
    if (pivots_ > options_.max_pivots) fail("simplex: pivot limit exceeded");
  }

  void iterate(int phase) {
    const double price_tol = options_.tol * (phase == 1 ? 1.0 : cost_scale_);
    const double pivot_tol = 1e-9;
    while (true) {
      const Eigen::VectorXd y = duals(phase);
      // Bland: lowest-index improving column enters.
      int entering = -1;
      for (int j = 0; j < cols_; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        const double reduced = cost_of(j, phase) - dot_column(y, j);
        if (reduced < -price_tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return;

      const Eigen::VectorXd alpha = binv_ * dense_column(entering);
      int row = -1;
      double best = INFINITY;
      for (int r = 0; r < rows_; ++r) {
        if (alpha(r) <= pivot_tol) continue;
        const double ratio = std::max(0.0, xb_(r)) / alpha(r);
        const double tie_tol = 1e-12 * std::max(1.0, std::abs(best));
        if (row < 0 || ratio < best - tie_tol) {
          row = r;
          best = ratio;
        } else if (ratio <= best + tie_tol &&
                   basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(row)]) {
          row = r;
          best = std::min(best, ratio);
        }
      }
      if (row < 0) fail("simplex: problem is unbounded");
      pivot(entering, row, alpha);
    }
  }

  void drive_out_artificials() {
    for (int r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= 0) continue;
      const Eigen::RowVectorXd row = binv_.row(r);
      for (int j = 0; j < cols_; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        const auto& col = lp_.columns[static_cast<std::size_t>(j)];
        double v = 0.0;
        for (std::size_t k = 0; k < col.rows.size(); ++k) v += row(col.rows[k]) * col.values[k];
        if (std::abs(v) > 1e-9) {
          pivot(j, r, binv_ * dense_column(j));
          break;
        }
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw NumericalError(what, std::vector<std::string>(trace_.begin(), trace_.end()));
  }

  const LinearProgram& lp_;
  SimplexOptions options_;
  int rows_;
  int cols_;
  Eigen::VectorXd b_;
  double cost_scale_ = 1.0;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  long pivots_ = 0;
  int since_refactor_ = 0;
  std::deque<std::string> trace_;
};

}  // namespace

SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options) {
  return RevisedSimplex(lp, options).solve();
}

}  // namespace mmot
