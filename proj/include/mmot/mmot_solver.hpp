#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmot/cost_model.hpp"
#include "mmot/metric_engine.hpp"
#include "mmot/monotonicity.hpp"
#include "mmot/simplex.hpp"

namespace mmot {

/// Discrete marginal: distinct support points with probability weights.
struct MarginalGrid {
  std::vector<Vector> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }

  /// `count` equally weighted points evenly spaced on [lo, hi].
  static MarginalGrid uniform_1d(double lo, double hi, int count);
};

/// Throws InputError unless weights are nonnegative, sum to 1 (1e-12) and points are distinct.
void validate_grid(const MarginalGrid& grid, int expected_dim);

/// Row-major (last marginal fastest) encoding of grid index tuples.
std::size_t ravel(const std::vector<int>& index, const std::vector<int>& sizes);
std::vector<int> unravel(std::size_t flat, const std::vector<int>& sizes);

Point grid_point(const std::vector<MarginalGrid>& grids, const std::vector<int>& index);

/// Discrete Kantorovich problem over the product of the grids.
struct KantorovichLp {
  std::vector<int> grid_sizes;
  std::vector<double> tuple_cost;  // one entry per index tuple, raveled
  int constraint_count = 0;        // sum of grid sizes, redundant rows included
  /// Reduced LP: the last row of every group but the first is dropped.
  LinearProgram lp;
  /// row_of[i][k] is the reduced row of marginal i, point k, or -1 if dropped.
  std::vector<std::vector<int>> row_of;
};

inline constexpr std::size_t kMaxTuples = 200'000;

KantorovichLp build_lp(const CostSpec& cost, const std::vector<MarginalGrid>& grids);

struct PlanAtom {
  std::vector<int> index;
  double mass = 0.0;
};

struct TransportPlan {
  std::vector<int> grid_sizes;
  std::vector<PlanAtom> atoms;  // sorted by index, no repeats
  double objective = 0.0;

  /// Merges repeated indices, drops zero masses and evaluates the objective.
  static TransportPlan from_atoms(const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                                  std::vector<PlanAtom> atoms);

  std::vector<double> marginal(int i) const;
  double total_mass() const;
};

struct DualCertificate {
  std::vector<std::vector<double>> potentials;  // u_i on the points of grid i
  double dual_value = 0.0;                      // sum_i sum_k u_i(k) w_i(k)
  double gap = 0.0;                             // objective - dual_value
};

struct LpSolution {
  TransportPlan plan;
  DualCertificate certificate;
  long pivots = 0;
};

LpSolution solve_lp(const KantorovichLp& problem, const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                    double tol = 1e-9);

struct OptimalityReport {
  bool primal_feasible = false;
  bool dual_feasible = false;
  bool complementary_slackness = false;
  bool gap_ok = false;
  double scale = 1.0;
  double max_marginal_error = 0.0;
  double max_dual_violation = 0.0;       // max over tuples of sum u - c
  double max_slackness_violation = 0.0;  // max over supported tuples of c - sum u
  double gap = 0.0;
  std::string witness;

  bool optimal() const { return primal_feasible && dual_feasible && complementary_slackness && gap_ok; }
};

/// Certifies a plan with a dual certificate; tolerances are tol * max(1, max |c|) for dual checks
/// and 1e-9 for marginals.
OptimalityReport verify_optimality(const TransportPlan& plan, const DualCertificate& certificate, const CostSpec& cost,
                                   const std::vector<MarginalGrid>& grids, double tol = 1e-9);

struct ExtractedSupport {
  SupportSet support;
  std::vector<std::vector<int>> indices;
  double discarded_mass = 0.0;
};

ExtractedSupport extract_support(const TransportPlan& plan, const std::vector<MarginalGrid>& grids,
                                 double mass_tol = 1e-10);

struct PairScore {
  bool conclusive = false;
  double value = -INFINITY;
  std::pair<std::size_t, std::size_t> worst{0, 0};
  std::size_t pairs = 0;
};

/// max of dy'G dy / |dy|^2 over support pairs within `radius` of the basepoint.
PairScore spacelike_score(const SupportSet& support, const MetricMatrix& metric, const Point& basepoint, double radius);

struct GraphInequalityReport {
  PairScore raw;                  // max |du_1|^2 - 3|du_2|^2 - |du_3|^2
  double normalized = -INFINITY;  // same divided by |du|^2
};

/// Lipschitz-graph inequality in the frame coordinates u = U y, split by the inertia blocks of H.
GraphInequalityReport graph_inequality_check(const SupportSet& support, const Frame& frame, const Point& basepoint,
                                             double radius);

/// Total variation distance 1/2 sum |a - b| between two plans on the same grids.
double tv_distance(const TransportPlan& a, const TransportPlan& b);

struct PlanAudit {
  bool feasible = false;
  bool optimal = false;
  double objective = 0.0;
  double max_marginal_error = 0.0;
  std::string issue;
};

struct NonuniquenessReport {
  double optimum = 0.0;
  std::vector<PlanAudit> plans;
  Matrix tv;  // pairwise distances
  std::vector<std::pair<int, int>> identical_pairs;
  bool non_unique = false;
};

NonuniquenessReport nonuniqueness_probe(const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                                        const std::vector<TransportPlan>& plans, double tol = 1e-9);

struct SupportDiagnostics {
  ExtractedSupport support;
  Point basepoint;
  PairScore spacelike;
  GraphInequalityReport graph;
  std::vector<MonotonicityReport> monotonicity;  // one per bipartition
};

/// Recomputes every diagnostic of a plan: support, spacelike score and graph inequality at the support
/// point nearest the support centroid, and c-monotonicity defects for all bipartitions.
SupportDiagnostics support_diagnostics(const CostSpec& cost, const TransportPlan& plan,
                                       const std::vector<MarginalGrid>& grids, const PartitionWeights& weights,
                                       double radius, double mass_tol = 1e-10);

/// One row per atom: k_1..k_m, flattened coordinates, mass (17 significant digits).
void write_plan_csv(std::ostream& out, const TransportPlan& plan, const std::vector<MarginalGrid>& grids);
/// One row per grid point: marginal, index, coordinates, potential.
void write_certificate_csv(std::ostream& out, const DualCertificate& certificate,
                           const std::vector<MarginalGrid>& grids);

}  // namespace mmot
