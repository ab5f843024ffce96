#include "mmot/metric_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

constexpr double kConditionGuard = 1e12;

std::string format_set(const std::vector<int>& group) {
  std::ostringstream out;
  out << '{';
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (k) out << ',';
    out << group[k] + 1;
  }
  out << '}';
  return out.str();
}

Signature from_counts(int q_plus, int q_minus, int q_zero, double zero_tol) {
  Signature s;
  s.q_plus = q_plus;
  s.q_minus = q_minus;
  s.q_zero = q_zero;
  s.zero_tol = zero_tol;
  return s;
}

bool invertible(const Matrix& A) {
  return A.rows() == A.cols() && A.rows() > 0 && condition_number(A) <= kConditionGuard;
}

}  // namespace

Bipartition Bipartition::from_group(int m, std::vector<int> group) {
  if (m < 2) throw InputError("bipartition: need m >= 2");
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  if (group.empty() || static_cast<int>(group.size()) >= m || group.front() < 0 || group.back() >= m) {
    throw InputError("bipartition: group must be a nonempty proper subset of the marginals");
  }
  std::vector<int> rest;
  for (int i = 0; i < m; ++i) {
    if (!std::binary_search(group.begin(), group.end(), i)) rest.push_back(i);
  }
  if (group.front() == 0) return {std::move(group), std::move(rest)};
  return {std::move(rest), std::move(group)};
}

bool Bipartition::contains_plus(int i) const {
  return std::binary_search(plus.begin(), plus.end(), i);
}

std::string Bipartition::label() const {
  return format_set(plus) + "|" + format_set(minus);
}

std::vector<Bipartition> enumerate_partitions(int m) {
  if (m < 2 || m > 20) throw InputError("enumerate_partitions: m must lie in [2, 20]");
  // Subsets of {1..m-1} joined to {0}, excluding the full set.
  const unsigned long count = (1UL << (m - 1)) - 1;
  std::vector<Bipartition> out;
  out.reserve(count);
  for (unsigned long mask = 0; mask < count; ++mask) {
    Bipartition p;
    p.plus.push_back(0);
    for (int i = 1; i < m; ++i) {
      if ((mask >> (i - 1)) & 1UL) {
        p.plus.push_back(i);
      } else {
        p.minus.push_back(i);
      }
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const Bipartition& a, const Bipartition& b) { return a.plus < b.plus; });
  return out;
}

PartitionWeights::PartitionWeights(int m, std::vector<double> weights)
    : m_(m), partitions_(enumerate_partitions(m)), weights_(std::move(weights)) {
  if (weights_.size() != partitions_.size()) throw InputError("partition weights: wrong count");
  double total = 0.0;
  for (double t : weights_) {
    if (!(t >= 0.0) || t > 1.0) throw InputError("partition weights: every t_p must lie in [0, 1]");
    total += t;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "partition weights sum " << total << " != 1";
    throw InputError(msg.str());
  }
}

PartitionWeights PartitionWeights::uniform(int m) {
  const std::size_t count = enumerate_partitions(m).size();
  return PartitionWeights(m, std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

PartitionWeights PartitionWeights::single(int m, const Bipartition& p) {
  return from_list(m, {{p, 1.0}});
}

PartitionWeights PartitionWeights::from_list(int m, const std::vector<std::pair<Bipartition, double>>& entries) {
  const auto all = enumerate_partitions(m);
  std::vector<double> weights(all.size(), 0.0);
  for (const auto& [p, t] : entries) {
    const auto canonical = Bipartition::from_group(m, p.plus);
    auto it = std::lower_bound(all.begin(), all.end(), canonical,
                               [](const Bipartition& a, const Bipartition& b) { return a.plus < b.plus; });
    if (it == all.end() || !(*it == canonical)) throw InputError("partition weights: unknown partition");
    weights[static_cast<std::size_t>(it - all.begin())] += t;
  }
  return PartitionWeights(m, std::move(weights));
}

double PartitionWeights::weight(const Bipartition& p) const {
  const auto canonical = Bipartition::from_group(m_, p.plus);
  auto it = std::lower_bound(partitions_.begin(), partitions_.end(), canonical,
                             [](const Bipartition& a, const Bipartition& b) { return a.plus < b.plus; });
  if (it == partitions_.end() || !(*it == canonical)) return 0.0;
  return weights_[static_cast<std::size_t>(it - partitions_.begin())];
}

Matrix PartitionWeights::pair_coefficients() const {
  Matrix a = Matrix::Zero(m_, m_);
  for (std::size_t k = 0; k < partitions_.size(); ++k) {
    const double t = weights_[k];
    if (t == 0.0) continue;
    for (int i : partitions_[k].plus) {
      for (int j : partitions_[k].minus) {
        a(i, j) += t;
        a(j, i) += t;
      }
    }
  }
  return a;
}

Matrix MetricMatrix::block(int i, int j) const {
  return G.block(offsets[static_cast<std::size_t>(i)], offsets[static_cast<std::size_t>(j)],
                 dims[static_cast<std::size_t>(i)], dims[static_cast<std::size_t>(j)]);
}

MetricMatrix assemble_metric(const std::vector<int>& dims, const CrossBlockFn& cross_block,
                             const PartitionWeights& weights) {
  const int m = static_cast<int>(dims.size());
  if (weights.marginals() != m) throw InputError("assemble_metric: weights and cost disagree on m");
  MetricMatrix M;
  M.dims = dims;
  M.offsets = block_offsets(dims);
  M.coefficients = weights.pair_coefficients();
  M.G = Matrix::Zero(M.total_dim(), M.total_dim());
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double a = M.coefficients(i, j);
      if (a == 0.0) continue;
      const Matrix block = a * cross_block(i, j);
      if (block.rows() != dims[static_cast<std::size_t>(i)] || block.cols() != dims[static_cast<std::size_t>(j)]) {
        throw InputError("assemble_metric: cross block has the wrong shape");
      }
      M.G.block(M.offsets[static_cast<std::size_t>(i)], M.offsets[static_cast<std::size_t>(j)], block.rows(),
                block.cols()) = block;
      M.G.block(M.offsets[static_cast<std::size_t>(j)], M.offsets[static_cast<std::size_t>(i)], block.cols(),
                block.rows()) = block.transpose();
    }
  }
  return M;
}

MetricMatrix assemble_metric(const CostSpec& cost, const Point& x, const PartitionWeights& weights,
                             DerivativeMethod method) {
  check_point(cost, x);
  double skew = 0.0;
  auto M = assemble_metric(
      cost.dims(),
      [&](int i, int j) {
        auto b = cross_hessian_block(cost, x, i, j, method);
        skew = std::max(skew, b.skew_residual);
        return b.entries;
      },
      weights);
  M.skew_residual = skew;
  return M;
}

Signature signature(const MetricMatrix& M, double zero_tol) {
  return signature(M.G, zero_tol);
}

Signature signature_m3_shortcut(const MetricMatrix& M, double zero_tol) {
  if (M.marginals() != 3) throw ShortcutInapplicable("m=3 shortcut needs exactly three marginals");
  const int n = M.dims[0];
  if (M.dims[1] != n || M.dims[2] != n) throw ShortcutInapplicable("m=3 shortcut needs equal dimensions");
  const Matrix G12 = M.block(0, 1);
  const Matrix G13 = M.block(0, 2);
  const Matrix G32 = M.block(2, 1);
  if (!invertible(G12) || !invertible(G13) || !invertible(G32)) {
    throw ShortcutInapplicable("m=3 shortcut needs invertible off-diagonal blocks");
  }
  const Matrix A = G12 * G32.lu().solve(M.block(2, 0));
  const Signature r = signature(A + A.transpose(), zero_tol);
  Signature s = from_counts(n + r.q_minus, n + r.q_plus, r.q_zero, r.zero_tol);
  return s;
}

Signature signature_m3_shortcut(const CostSpec& cost, const Point& x, const PartitionWeights& w) {
  return signature_m3_shortcut(assemble_metric(cost, x, w));
}

RecursiveSignature signature_recursive(const MetricMatrix& M, double zero_tol) {
  RecursiveSignature out;
  const int m = M.marginals();
  auto fallback = [&](std::string reason) {
    out.fell_back = true;
    out.reason = std::move(reason);
    out.signature = signature(M.G, zero_tol);
    return out;
  };
  if (m < 2) return fallback("fewer than two marginals");

  // Trailing block over marginals m-2, m-1.
  int start = M.offsets[static_cast<std::size_t>(m - 2)];
  const Matrix C = M.block(m - 2, m - 1);
  if (!invertible(C)) return fallback("trailing 2x2 block is singular");
  const int n_last = static_cast<int>(C.rows());
  Signature running = from_counts(n_last, n_last, 0, 0.0);

  for (int k = m - 3; k >= 0; --k) {
    const int size = M.total_dim() - start;
    const Matrix Gl = M.G.bottomRightCorner(size, size);
    if (!invertible(Gl)) {
      std::ostringstream msg;
      msg << "intermediate block starting at marginal " << k + 2 << " is singular";
      return fallback(msg.str());
    }
    const int rows = M.dims[static_cast<std::size_t>(k)];
    const Matrix B = M.G.block(M.offsets[static_cast<std::size_t>(k)], start, rows, size);
    const Matrix S = B * Gl.partialPivLu().solve(B.transpose());
    RecursionStep step;
    step.added_marginal = k;
    step.schur = signature((S + S.transpose()) / 2.0, zero_tol);
    running = from_counts(running.q_plus + step.schur.q_minus, running.q_minus + step.schur.q_plus,
                          running.q_zero + step.schur.q_zero, step.schur.zero_tol);
    step.running = running;
    out.steps.push_back(std::move(step));
    start = M.offsets[static_cast<std::size_t>(k)];
  }
  out.signature = running;
  return out;
}

RecursiveSignature signature_recursive(const CostSpec& cost, const Point& x, const PartitionWeights& w) {
  return signature_recursive(assemble_metric(cost, x, w));
}

RankBoundReport rank_bound_check(const MetricMatrix& M, double rank_tol, double zero_tol) {
  RankBoundReport report;
  const int m = M.marginals();
  report.ranks = Eigen::MatrixXi::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      report.ranks(i, j) = numerical_rank(M.block(i, j), rank_tol);
      report.max_rank = std::max(report.max_rank, report.ranks(i, j));
    }
  }
  report.signature = signature(M, zero_tol);
  report.margin_plus = report.signature.q_plus - report.max_rank;
  report.margin_minus = report.signature.q_minus - report.max_rank;
  report.holds = report.margin_plus >= 0 && report.margin_minus >= 0;
  return report;
}

NecessaryConditionReport necessary_condition_check(const CostSpec& cost, const Point& x) {
  const int m = cost.marginals();
  if (m < 3) throw InputError("necessary_condition_check: needs m >= 3");
  for (int n : cost.dims()) {
    if (n != cost.dim(0)) throw InputError("necessary_condition_check: needs equal dimensions");
  }
  std::vector<std::vector<Matrix>> D(static_cast<std::size_t>(m), std::vector<Matrix>(static_cast<std::size_t>(m)));
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cross_hessian_block(cost, x, i, j).entries;
      D[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].transpose();
    }
  }
  auto at = [&](int i, int j) -> const Matrix& { return D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };

  NecessaryConditionReport report;
  bool all_pass = true;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        if (i == j || j == k || i == k) continue;
        TripleVerdict v{i, j, k, false, false, 0.0};
        if (invertible(at(k, j))) {
          v.applicable = true;
          const Matrix T = at(i, j) * at(k, j).lu().solve(at(k, i));
          const Matrix sym = T + T.transpose();
          Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
          v.max_eigenvalue = eig.eigenvalues().maxCoeff();
          const double tol = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
          v.negative_definite = v.max_eigenvalue < -tol;
          if (!v.negative_definite) report.excludes_timelike_optimum = true;
        }
        all_pass = all_pass && v.applicable && v.negative_definite;
        report.triples.push_back(v);
      }
    }
  }
  report.all_pass = all_pass;
  return report;
}

Frame diagonalizing_frame(const Matrix& G, double zero_tol) {
  if (G.rows() != G.cols()) throw InputError("diagonalizing_frame: matrix must be square");
  const Matrix sym = (G + G.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("diagonalizing_frame: eigensolver failed");
  const Vector& values = eig.eigenvalues();
  const Matrix& vectors = eig.eigenvectors();

  Frame frame;
  frame.signature = signature(G, zero_tol);
  const double tol = frame.signature.zero_tol;
  const auto N = G.rows();

  // Positive eigenvalues first (largest first), then negative (most negative first), then null.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  auto rank = [&](Eigen::Index k) { return values(k) > tol ? 0 : (values(k) < -tol ? 1 : 2); };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return std::abs(values(a)) > std::abs(values(b));
  });

  frame.U.resize(N, N);
  frame.h.resize(N);
  for (Eigen::Index r = 0; r < N; ++r) {
    const auto k = order[static_cast<std::size_t>(r)];
    const int sign = rank(k) == 0 ? 1 : (rank(k) == 1 ? -1 : 0);
    const double scale = sign == 0 ? 1.0 : 1.0 / std::sqrt(std::abs(values(k)));
    frame.U.row(r) = scale * vectors.col(k).transpose();
    frame.h(r) = sign;
  }
  const Matrix H = frame.h.cast<double>().asDiagonal();
  frame.residual = N == 0 ? 0.0 : (frame.U * sym * frame.U.transpose() - H).cwiseAbs().maxCoeff();
  return frame;
}

Signature bipartite_signature(const CostSpec& cost, const Point& x, const Bipartition& p, double rank_tol) {
  check_point(cost, x);
  if (p.marginals() != cost.marginals()) throw InputError("bipartite_signature: partition does not match cost");
  int rows = 0;
  int cols = 0;
  for (int i : p.plus) rows += cost.dim(i);
  for (int j : p.minus) cols += cost.dim(j);
  Matrix C = Matrix::Zero(rows, cols);
  int r0 = 0;
  for (int i : p.plus) {
    int c0 = 0;
    for (int j : p.minus) {
      C.block(r0, c0, cost.dim(i), cost.dim(j)) = cross_hessian_block(cost, x, i, j).entries;
      c0 += cost.dim(j);
    }
    r0 += cost.dim(i);
  }
  const int N = cost.total_dim();
  const int r = numerical_rank(C, rank_tol);
  Signature s = from_counts(r, r, N - 2 * r, 0.0);

  // Eigenvalues of [[0, C], [C', 0]] are the singular values of C with both signs, plus zeros.
  Eigen::JacobiSVD<Matrix> svd(C);
  const Vector sv = svd.singularValues();
  std::vector<double> values(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    values[static_cast<std::size_t>(2 * k)] = sv(k);
    values[static_cast<std::size_t>(2 * k + 1)] = -sv(k);
  }
  std::sort(values.begin(), values.end());
  s.eigenvalues = std::move(values);
  s.zero_tol = sv.size() ? rank_tol * sv(0) : 0.0;
  return s;
}

}  // namespace mmot
