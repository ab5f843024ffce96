#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mmot/cost_model.hpp"
#include "mmot/inertia.hpp"

namespace mmot {

/// Split of the marginal indices {0..m-1} into two nonempty groups, canonical with 0 in `plus`.
struct Bipartition {
  std::vector<int> plus;
  std::vector<int> minus;

  /// Canonicalizes: if 0 is in `group` it becomes `plus`, otherwise its complement does.
  static Bipartition from_group(int m, std::vector<int> group);

  int marginals() const { return static_cast<int>(plus.size() + minus.size()); }
  bool contains_plus(int i) const;
  bool separates(int i, int j) const { return contains_plus(i) != contains_plus(j); }
  /// One-based set notation, e.g. "{1,3}|{2}".
  std::string label() const;

  friend bool operator==(const Bipartition&, const Bipartition&) = default;
};

/// All 2^(m-1) - 1 canonical bipartitions, ordered lexicographically on `plus`.
std::vector<Bipartition> enumerate_partitions(int m);

/// Convex weights t_p over the bipartitions of {0..m-1}.
class PartitionWeights {
 public:
  static PartitionWeights uniform(int m);
  static PartitionWeights single(int m, const Bipartition& p);
  static PartitionWeights from_list(int m, const std::vector<std::pair<Bipartition, double>>& entries);

  int marginals() const { return m_; }
  const std::vector<Bipartition>& partitions() const { return partitions_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(const Bipartition& p) const;

  /// a_ij = sum of t_p over partitions separating i and j; zero diagonal.
  Matrix pair_coefficients() const;

 private:
  PartitionWeights(int m, std::vector<double> weights);

  int m_ = 0;
  std::vector<Bipartition> partitions_;
  std::vector<double> weights_;
};

/// The N x N matrix of g = sum_p t_p g_p, with G_ij = a_ij D^2_{x_i x_j} c and zero diagonal blocks.
struct MetricMatrix {
  std::vector<int> dims;
  std::vector<int> offsets;
  Matrix G;
  Matrix coefficients;
  double skew_residual = 0.0;

  int marginals() const { return static_cast<int>(dims.size()); }
  int total_dim() const { return offsets.back(); }
  Matrix block(int i, int j) const;
};

using CrossBlockFn = std::function<Matrix(int i, int j)>;

/// Assembles G from cross blocks supplied for i < j (the (j,i) block is the transpose).
MetricMatrix assemble_metric(const std::vector<int>& dims, const CrossBlockFn& cross_block,
                             const PartitionWeights& weights);

MetricMatrix assemble_metric(const CostSpec& cost, const Point& x, const PartitionWeights& weights,
                             DerivativeMethod method = DerivativeMethod::automatic);

Signature signature(const MetricMatrix& M, double zero_tol = -1.0);

/// Dimension N - q_minus of the Lipschitz submanifold containing the support near the point.
inline int dimension_bound(const Signature& s) {
  return s.dimension() - s.q_minus;
}
/// Dimension N - q_plus of the graph u_1 = f(u_2, u_3) over the non-positive directions of the frame.
inline int graph_dimension_bound(const Signature& s) {
  return s.dimension() - s.q_plus;
}

/// Thrown when a structural shortcut's invertibility hypotheses fail.
class ShortcutInapplicable : public UnsupportedError {
 public:
  using UnsupportedError::UnsupportedError;
};

/// Three-marginal signature (n + r_-, n + r_+, n - r_+ - r_-) from the inertia (r_+, r_-) of A + A'
/// with A = G_12 G_32^{-1} G_31.
Signature signature_m3_shortcut(const MetricMatrix& M, double zero_tol = -1.0);
Signature signature_m3_shortcut(const CostSpec& cost, const Point& x, const PartitionWeights& w);

struct RecursionStep {
  int added_marginal = 0;
  Signature schur;    // inertia of sym(B G_l^{-1} B')
  Signature running;  // inertia of G_{l+1}
};

struct RecursiveSignature {
  Signature signature;
  bool fell_back = false;
  std::string reason;
  std::vector<RecursionStep> steps;
};

/// Inertia of G built up from the trailing 2x2 block by Schur-complement additivity.
RecursiveSignature signature_recursive(const MetricMatrix& M, double zero_tol = -1.0);
RecursiveSignature signature_recursive(const CostSpec& cost, const Point& x, const PartitionWeights& w);

struct RankBoundReport {
  Eigen::MatrixXi ranks;  // numerical rank of each off-diagonal block
  int max_rank = 0;
  Signature signature;
  bool holds = true;
  int margin_plus = 0;   // q_plus - max_rank
  int margin_minus = 0;  // q_minus - max_rank
};

RankBoundReport rank_bound_check(const MetricMatrix& M, double rank_tol = 1e-10, double zero_tol = -1.0);

struct TripleVerdict {
  int i = 0;
  int j = 0;
  int k = 0;
  bool applicable = false;
  bool negative_definite = false;
  double max_eigenvalue = 0.0;  // of T + T'
};

struct NecessaryConditionReport {
  std::vector<TripleVerdict> triples;
  bool all_pass = false;
  /// True when some applicable triple fails, ruling out signature ((m-1)n, n, 0).
  bool excludes_timelike_optimum = false;
};

/// For every ordered triple of distinct marginals, tests whether
/// T = D_ij (D_kj)^{-1} D_ki has T + T' negative definite.
NecessaryConditionReport necessary_condition_check(const CostSpec& cost, const Point& x);

struct Frame {
  Matrix U;           // U G U' = diag(h)
  Eigen::VectorXi h;  // +1 (q_plus times), -1 (q_minus), 0 (q_zero)
  Signature signature;
  double residual = 0.0;  // max |U G U' - H|
};

Frame diagonalizing_frame(const Matrix& G, double zero_tol = -1.0);
inline Frame diagonalizing_frame(const MetricMatrix& M, double zero_tol = -1.0) {
  return diagonalizing_frame(M.G, zero_tol);
}

/// Signature (r, r, N - 2r) of the single-partition metric, r the rank of the stacked
/// cross block between the two groups.
Signature bipartite_signature(const CostSpec& cost, const Point& x, const Bipartition& p, double rank_tol = 1e-10);

}  // namespace mmot
