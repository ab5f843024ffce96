#include "mmot/mmot_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

void check_grids(const CostSpec& cost, const std::vector<MarginalGrid>& grids) {
  if (static_cast<int>(grids.size()) != cost.marginals()) {
    throw InputError("need one grid per marginal");
  }
  for (int i = 0; i < cost.marginals(); ++i) validate_grid(grids[static_cast<std::size_t>(i)], cost.dim(i));
}

std::vector<int> sizes_of(const std::vector<MarginalGrid>& grids) {
  std::vector<int> sizes;
  sizes.reserve(grids.size());
  for (const auto& g : grids) sizes.push_back(g.size());
  return sizes;
}

// Iterates all tuples of the product grid in raveled order.
template <typename Fn>
void for_each_tuple(const std::vector<int>& sizes, Fn&& fn) {
  if (sizes.empty() || std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) return;
  std::vector<int> index(sizes.size(), 0);
  std::size_t flat = 0;
  while (true) {
    fn(flat, index);
    ++flat;
    auto d = static_cast<std::ptrdiff_t>(sizes.size()) - 1;
    for (; d >= 0; --d) {
      const auto ud = static_cast<std::size_t>(d);
      if (++index[ud] < sizes[ud]) break;
      index[ud] = 0;
    }
    if (d < 0) return;
  }
}

double max_abs_cost(const CostSpec& cost, const std::vector<MarginalGrid>& grids) {
  double scale = 1.0;
  for_each_tuple(sizes_of(grids), [&](std::size_t, const std::vector<int>& index) {
    scale = std::max(scale, std::abs(evaluate(cost, grid_point(grids, index))));
  });
  return scale;
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_near(const SupportSet& support, const Point& basepoint,
                                                            double radius, std::vector<Vector>& flat) {
  if (!(radius > 0.0)) throw InputError("radius must be positive");
  const Vector base = flatten(basepoint);
  std::vector<std::size_t> near;
  flat.clear();
  for (std::size_t a = 0; a < support.size(); ++a) {
    flat.push_back(flatten(support[a]));
    if (flat.back().size() != base.size()) throw InputError("support and basepoint have different shapes");
    if ((flat.back() - base).norm() <= radius) near.push_back(a);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t p = 0; p < near.size(); ++p) {
    for (std::size_t q = p + 1; q < near.size(); ++q) pairs.emplace_back(near[p], near[q]);
  }
  return pairs;
}

}  // namespace

MarginalGrid MarginalGrid::uniform_1d(double lo, double hi, int count) {
  if (count < 1) throw InputError("uniform grid needs at least one point");
  MarginalGrid g;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.5 : static_cast<double>(k) / (count - 1);
    g.points.push_back(Vector::Constant(1, lo + (hi - lo) * t));
    g.weights.push_back(1.0 / count);
  }
  return g;
}

void validate_grid(const MarginalGrid& grid, int expected_dim) {
  if (grid.points.empty() || grid.points.size() != grid.weights.size()) {
    throw InputError("grid: need one weight per point and at least one point");
  }
  double total = 0.0;
  for (double w : grid.weights) {
    if (!(w >= 0.0)) throw InputError("grid: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "grid: weights sum " << total << " != 1";
    throw InputError(msg.str());
  }
  for (std::size_t a = 0; a < grid.points.size(); ++a) {
    if (grid.points[a].size() != expected_dim) throw InputError("grid: point dimension mismatch");
    for (std::size_t b = a + 1; b < grid.points.size(); ++b) {
      if (grid.points[a] == grid.points[b]) throw InputError("grid: points must be distinct");
    }
  }
}

std::size_t ravel(const std::vector<int>& index, const std::vector<int>& sizes) {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    flat = flat * static_cast<std::size_t>(sizes[d]) + static_cast<std::size_t>(index[d]);
  }
  return flat;
}

std::vector<int> unravel(std::size_t flat, const std::vector<int>& sizes) {
  std::vector<int> index(sizes.size());
  for (std::size_t d = sizes.size(); d-- > 0;) {
    index[d] = static_cast<int>(flat % static_cast<std::size_t>(sizes[d]));
    flat /= static_cast<std::size_t>(sizes[d]);
  }
  return index;
}

Point grid_point(const std::vector<MarginalGrid>& grids, const std::vector<int>& index) {
  Point p;
  p.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) p.push_back(grids[i].points[static_cast<std::size_t>(index[i])]);
  return p;
}

KantorovichLp build_lp(const CostSpec& cost, const std::vector<MarginalGrid>& grids) {
  check_grids(cost, grids);
  KantorovichLp out;
  out.grid_sizes = sizes_of(grids);
  double tuples = 1.0;
  for (int k : out.grid_sizes) tuples *= k;
  if (tuples > static_cast<double>(kMaxTuples)) {
    std::ostringstream msg;
    msg << "product grid has " << static_cast<long long>(tuples) << " tuples, limit is " << kMaxTuples;
    throw InputError(msg.str());
  }

  const int m = cost.marginals();
  int row = 0;
  out.row_of.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int k = out.grid_sizes[static_cast<std::size_t>(i)];
    out.constraint_count += k;
    for (int p = 0; p < k; ++p) {
      const bool dropped = i > 0 && p == k - 1;
      out.row_of[static_cast<std::size_t>(i)].push_back(dropped ? -1 : row++);
    }
  }
  out.lp.rows = row;
  out.lp.rhs.resize(static_cast<std::size_t>(row));
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < out.grid_sizes[static_cast<std::size_t>(i)]; ++p) {
      const int r = out.row_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
      if (r >= 0)
        out.lp.rhs[static_cast<std::size_t>(r)] =
            grids[static_cast<std::size_t>(i)].weights[static_cast<std::size_t>(p)];
    }
  }

  const auto count = static_cast<std::size_t>(tuples);
  out.tuple_cost.resize(count);
  out.lp.cost.resize(count);
  out.lp.columns.resize(count);
  for_each_tuple(out.grid_sizes, [&](std::size_t flat, const std::vector<int>& index) {
    const double c = evaluate(cost, grid_point(grids, index));
    out.tuple_cost[flat] = c;
    out.lp.cost[flat] = c;
    auto& col = out.lp.columns[flat];
    for (int i = 0; i < m; ++i) {
      const int r =
          out.row_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(index[static_cast<std::size_t>(i)])];
      if (r >= 0) {
        col.rows.push_back(r);
        col.values.push_back(1.0);
      }
    }
  });
  return out;
}

TransportPlan TransportPlan::from_atoms(const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                                        std::vector<PlanAtom> atoms) {
  check_grids(cost, grids);
  TransportPlan plan;
  plan.grid_sizes = sizes_of(grids);
  std::map<std::vector<int>, double> merged;
  for (auto& a : atoms) {
    if (a.index.size() != grids.size()) throw InputError("plan atom: index has the wrong length");
    for (std::size_t i = 0; i < grids.size(); ++i) {
      if (a.index[i] < 0 || a.index[i] >= grids[i].size()) throw InputError("plan atom: grid index out of range");
    }
    if (!(a.mass >= 0.0)) throw InputError("plan atom: mass must be nonnegative");
    merged[a.index] += a.mass;
  }
  for (auto& [index, mass] : merged) {
    if (mass == 0.0) continue;
    plan.objective += mass * evaluate(cost, grid_point(grids, index));
    plan.atoms.push_back({index, mass});
  }
  return plan;
}

std::vector<double> TransportPlan::marginal(int i) const {
  std::vector<double> out(static_cast<std::size_t>(grid_sizes.at(static_cast<std::size_t>(i))), 0.0);
  for (const auto& a : atoms) out[static_cast<std::size_t>(a.index[static_cast<std::size_t>(i)])] += a.mass;
  return out;
}

double TransportPlan::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}

LpSolution solve_lp(const KantorovichLp& problem, const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                    double tol) {
  SimplexOptions options;
  options.tol = tol;
  const SimplexResult result = solve_simplex(problem.lp, options);

  LpSolution out;
  out.pivots = result.pivots;
  std::vector<PlanAtom> atoms;
  for (std::size_t flat = 0; flat < result.x.size(); ++flat) {
    if (result.x[flat] > 0.0) atoms.push_back({unravel(flat, problem.grid_sizes), result.x[flat]});
  }
  out.plan = TransportPlan::from_atoms(cost, grids, std::move(atoms));

  auto& cert = out.certificate;
  cert.potentials.resize(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    for (std::size_t k = 0; k < grids[i].points.size(); ++k) {
      const int r = problem.row_of[i][k];
      const double u = r >= 0 ? result.duals[static_cast<std::size_t>(r)] : 0.0;
      cert.potentials[i].push_back(u);
      cert.dual_value += u * grids[i].weights[k];
    }
  }
  cert.gap = out.plan.objective - cert.dual_value;
  return out;
}

OptimalityReport verify_optimality(const TransportPlan& plan, const DualCertificate& certificate, const CostSpec& cost,
                                   const std::vector<MarginalGrid>& grids, double tol) {
  check_grids(cost, grids);
  OptimalityReport report;
  std::ostringstream witness;
  const auto sizes = sizes_of(grids);
  if (plan.grid_sizes != sizes || certificate.potentials.size() != grids.size()) {
    throw InputError("verify_optimality: plan, certificate and grids disagree on shape");
  }
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (certificate.potentials[i].size() != grids[i].points.size()) {
      throw InputError("verify_optimality: certificate has the wrong number of potentials");
    }
  }

  report.primal_feasible = true;
  for (const auto& a : plan.atoms) {
    if (a.mass < 0.0) {
      report.primal_feasible = false;
      witness << "negative mass; ";
    }
  }
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const auto marg = plan.marginal(static_cast<int>(i));
    for (std::size_t k = 0; k < marg.size(); ++k) {
      report.max_marginal_error = std::max(report.max_marginal_error, std::abs(marg[k] - grids[i].weights[k]));
    }
  }
  if (report.max_marginal_error > 1e-9) {
    report.primal_feasible = false;
    witness << "marginal error " << report.max_marginal_error << "; ";
  }

  auto potential_sum = [&](const std::vector<int>& index) {
    double s = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) s += certificate.potentials[i][static_cast<std::size_t>(index[i])];
    return s;
  };

  report.scale = max_abs_cost(cost, grids);
  const double slack_tol = tol * report.scale;
  report.max_dual_violation = -INFINITY;
  std::vector<int> worst_dual;
  for_each_tuple(sizes, [&](std::size_t, const std::vector<int>& index) {
    const double v = potential_sum(index) - evaluate(cost, grid_point(grids, index));
    if (v > report.max_dual_violation) {
      report.max_dual_violation = v;
      worst_dual = index;
    }
  });
  report.dual_feasible = report.max_dual_violation <= slack_tol;
  if (!report.dual_feasible) {
    witness << "dual infeasible at tuple (";
    for (std::size_t i = 0; i < worst_dual.size(); ++i) witness << (i ? "," : "") << worst_dual[i];
    witness << ") by " << report.max_dual_violation << "; ";
  }

  report.complementary_slackness = true;
  for (const auto& a : plan.atoms) {
    if (a.mass <= tol) continue;
    const double slack = evaluate(cost, grid_point(grids, a.index)) - potential_sum(a.index);
    report.max_slackness_violation = std::max(report.max_slackness_violation, slack);
    if (slack > slack_tol && report.complementary_slackness) {
      report.complementary_slackness = false;
      witness << "mass " << a.mass << " on tuple (";
      for (std::size_t i = 0; i < a.index.size(); ++i) witness << (i ? "," : "") << a.index[i];
      witness << ") with slack " << slack << "; ";
    }
  }

  double dual_value = 0.0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    for (std::size_t k = 0; k < grids[i].weights.size(); ++k)
      dual_value += certificate.potentials[i][k] * grids[i].weights[k];
  }
  report.gap = plan.objective - dual_value;
  report.gap_ok = std::abs(report.gap) <= slack_tol;
  if (!report.gap_ok) witness << "duality gap " << report.gap << "; ";
  report.witness = witness.str();
  return report;
}

ExtractedSupport extract_support(const TransportPlan& plan, const std::vector<MarginalGrid>& grids, double mass_tol) {
  std::vector<Point> points;
  std::vector<double> masses;
  ExtractedSupport out;
  for (const auto& a : plan.atoms) {
    if (a.mass > mass_tol) {
      points.push_back(grid_point(grids, a.index));
      masses.push_back(a.mass);
      out.indices.push_back(a.index);
    } else {
      out.discarded_mass += a.mass;
    }
  }
  if (points.empty()) throw InputError("extract_support: no atom above the mass tolerance");
  out.support = SupportSet(std::move(points), std::move(masses));
  return out;
}

PairScore spacelike_score(const SupportSet& support, const MetricMatrix& metric, const Point& basepoint,
                          double radius) {
  std::vector<Vector> flat;
  const auto pairs = pairs_near(support, basepoint, radius, flat);
  PairScore score;
  for (const auto& [a, b] : pairs) {
    const Vector dy = flat[a] - flat[b];
    const double norm2 = dy.squaredNorm();
    if (norm2 == 0.0) continue;
    const double value = dy.dot(metric.G * dy) / norm2;
    ++score.pairs;
    if (value > score.value) {
      score.value = value;
      score.worst = {a, b};
    }
  }
  score.conclusive = score.pairs > 0;
  return score;
}

GraphInequalityReport graph_inequality_check(const SupportSet& support, const Frame& frame, const Point& basepoint,
                                             double radius) {
  std::vector<Vector> flat;
  const auto pairs = pairs_near(support, basepoint, radius, flat);
  GraphInequalityReport report;
  for (const auto& [a, b] : pairs) {
    const Vector du = frame.U * (flat[a] - flat[b]);
    double timelike_free = 0.0;  // |du_1|^2
    double negative = 0.0;       // |du_2|^2
    double null = 0.0;           // |du_3|^2
    for (Eigen::Index k = 0; k < du.size(); ++k) {
      const double sq = du(k) * du(k);
      if (frame.h(k) > 0) {
        timelike_free += sq;
      } else if (frame.h(k) < 0) {
        negative += sq;
      } else {
        null += sq;
      }
    }
    const double residual = timelike_free - 3.0 * negative - null;
    ++report.raw.pairs;
    if (residual > report.raw.value) {
      report.raw.value = residual;
      report.raw.worst = {a, b};
    }
    const double total = du.squaredNorm();
    if (total > 0.0) report.normalized = std::max(report.normalized, residual / total);
  }
  report.raw.conclusive = report.raw.pairs > 0;
  return report;
}

double tv_distance(const TransportPlan& a, const TransportPlan& b) {
  if (a.grid_sizes != b.grid_sizes) throw InputError("tv_distance: plans live on different grids");
  std::map<std::vector<int>, double> diff;
  for (const auto& atom : a.atoms) diff[atom.index] += atom.mass;
  for (const auto& atom : b.atoms) diff[atom.index] -= atom.mass;
  double total = 0.0;
  for (const auto& [index, d] : diff) total += std::abs(d);
  return 0.5 * total;
}

NonuniquenessReport nonuniqueness_probe(const CostSpec& cost, const std::vector<MarginalGrid>& grids,
                                        const std::vector<TransportPlan>& plans, double tol) {
  NonuniquenessReport report;
  const auto problem = build_lp(cost, grids);
  const auto solution = solve_lp(problem, cost, grids, tol);
  report.optimum = solution.plan.objective;
  const double scale = max_abs_cost(cost, grids);

  const auto sizes = sizes_of(grids);
  std::vector<bool> optimal(plans.size(), false);
  for (std::size_t p = 0; p < plans.size(); ++p) {
    PlanAudit audit;
    const auto& plan = plans[p];
    audit.objective = plan.objective;
    if (plan.grid_sizes != sizes) {
      audit.issue = "plan lives on different grids";
      report.plans.push_back(audit);
      continue;
    }
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const auto marg = plan.marginal(static_cast<int>(i));
      for (std::size_t k = 0; k < marg.size(); ++k) {
        audit.max_marginal_error = std::max(audit.max_marginal_error, std::abs(marg[k] - grids[i].weights[k]));
      }
    }
    audit.feasible = audit.max_marginal_error <= 1e-9;
    if (!audit.feasible) {
      std::ostringstream msg;
      msg << "marginal error " << audit.max_marginal_error;
      audit.issue = msg.str();
    }
    audit.optimal = audit.feasible && std::abs(plan.objective - report.optimum) <= tol * scale;
    if (audit.feasible && !audit.optimal) {
      std::ostringstream msg;
      msg << "objective " << plan.objective << " exceeds optimum " << report.optimum;
      audit.issue = msg.str();
    }
    optimal[p] = audit.optimal;
    report.plans.push_back(audit);
  }

  const auto count = static_cast<Eigen::Index>(plans.size());
  report.tv = Matrix::Zero(count, count);
  for (Eigen::Index a = 0; a < count; ++a) {
    for (Eigen::Index b = a + 1; b < count; ++b) {
      if (plans[static_cast<std::size_t>(a)].grid_sizes != plans[static_cast<std::size_t>(b)].grid_sizes) continue;
      const double d = tv_distance(plans[static_cast<std::size_t>(a)], plans[static_cast<std::size_t>(b)]);
      report.tv(a, b) = report.tv(b, a) = d;
      if (d <= tol) {
        report.identical_pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
      } else if (optimal[static_cast<std::size_t>(a)] && optimal[static_cast<std::size_t>(b)]) {
        report.non_unique = true;
      }
    }
  }
  return report;
}

SupportDiagnostics support_diagnostics(const CostSpec& cost, const TransportPlan& plan,
                                       const std::vector<MarginalGrid>& grids, const PartitionWeights& weights,
                                       double radius, double mass_tol) {
  SupportDiagnostics diag{extract_support(plan, grids, mass_tol), {}, {}, {}, {}};
  const auto& support = diag.support.support;

  Vector centroid = Vector::Zero(cost.total_dim());
  for (const auto& p : support.points()) centroid += flatten(p);
  centroid /= static_cast<double>(support.size());
  std::size_t nearest = 0;
  double best = INFINITY;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const double d = (flatten(support[a]) - centroid).norm();
    if (d < best) {
      best = d;
      nearest = a;
    }
  }
  diag.basepoint = support[nearest];

  if (cost.is_builtin() || std::holds_alternative<External>(cost.kind())) {
    const auto metric = assemble_metric(cost, diag.basepoint, weights);
    diag.spacelike = spacelike_score(support, metric, diag.basepoint, radius);
    diag.graph = graph_inequality_check(support, diagonalizing_frame(metric), diag.basepoint, radius);
  }
  const double tol = default_violation_tol(cost, support);
  for (const auto& p : enumerate_partitions(cost.marginals())) {
    diag.monotonicity.push_back(c_monotone_violations(cost, support, p, tol));
  }
  return diag;
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan, const std::vector<MarginalGrid>& grids) {
  const std::size_t m = grids.size();
  for (std::size_t i = 0; i < m; ++i) out << (i ? "," : "") << 'k' << i + 1;
  for (std::size_t i = 0; i < m; ++i) {
    const auto n = grids[i].points.front().size();
    for (Eigen::Index a = 0; a < n; ++a) out << ",x" << i + 1 << '_' << a + 1;
  }
  out << ",mass\n";
  out << std::setprecision(17);
  for (const auto& atom : plan.atoms) {
    for (std::size_t i = 0; i < m; ++i) out << (i ? "," : "") << atom.index[i];
    const Point p = grid_point(grids, atom.index);
    for (const auto& v : p) {
      for (Eigen::Index a = 0; a < v.size(); ++a) out << ',' << v(a);
    }
    out << ',' << atom.mass << '\n';
  }
}

void write_certificate_csv(std::ostream& out, const DualCertificate& certificate,
                           const std::vector<MarginalGrid>& grids) {
  Eigen::Index width = 0;
  for (const auto& g : grids) width = std::max(width, g.points.front().size());
  out << "marginal,index";
  for (Eigen::Index a = 0; a < width; ++a) out << ",x_" << a + 1;
  out << ",potential\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    for (std::size_t k = 0; k < grids[i].points.size(); ++k) {
      out << i + 1 << ',' << k;
      const auto& v = grids[i].points[k];
      for (Eigen::Index a = 0; a < width; ++a) {
        out << ',';
        if (a < v.size()) out << v(a);
      }
      out << ',' << certificate.potentials[i][k] << '\n';
    }
  }
}

}  // namespace mmot
