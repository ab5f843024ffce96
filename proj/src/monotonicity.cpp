#include "mmot/monotonicity.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "mmot/errors.hpp"

namespace mmot {

namespace {

double point_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

void require_scalar_marginals(const CostSpec& cost, const char* who) {
  for (int n : cost.dims()) {
    if (n != 1) throw InputError(std::string(who) + ": requires one-dimensional marginals");
  }
}

Point scalar_point(const std::vector<double>& values) {
  Point p;
  p.reserve(values.size());
  for (double v : values) p.push_back(Vector::Constant(1, v));
  return p;
}

// Uniform sign of the mixed partial over a product grid of the box, if any.
std::optional<Sign> mixed_partial_sign(const CostSpec& cost, int i, int j, const Box& box) {
  const int m = cost.marginals();
  int per_axis = 2;
  while (std::pow(per_axis + 1, m) <= 4096.0 && per_axis < 9) ++per_axis;
  std::vector<int> counter(static_cast<std::size_t>(m), 0);
  std::vector<double> coords(static_cast<std::size_t>(m));
  bool any_negative = false;
  bool any_positive = false;
  bool any_zero = false;
  while (true) {
    for (int k = 0; k < m; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      coords[kk] = box.lo[kk] + (box.hi[kk] - box.lo[kk]) * counter[kk] / (per_axis - 1);
    }
    const double d = cross_hessian_block(cost, scalar_point(coords), i, j).entries(0, 0);
    any_negative = any_negative || d < 0.0;
    any_positive = any_positive || d > 0.0;
    any_zero = any_zero || d == 0.0;
    int k = 0;
    while (k < m && ++counter[static_cast<std::size_t>(k)] == per_axis) counter[static_cast<std::size_t>(k++)] = 0;
    if (k == m) break;
  }
  if (any_zero || (any_negative && any_positive)) return std::nullopt;
  return any_negative ? Sign::negative : Sign::positive;
}

}  // namespace

SupportSet::SupportSet(std::vector<Point> points, std::vector<double> masses, double duplicate_tol)
    : points_(std::move(points)), masses_(std::move(masses)) {
  if (points_.empty()) throw InputError("support set must be nonempty");
  if (!masses_.empty() && masses_.size() != points_.size()) throw InputError("support set: one mass per point");
  for (const auto& p : points_) {
    if (p.size() != points_.front().size()) throw InputError("support set: points have different shapes");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].size() != points_.front()[i].size()) throw InputError("support set: points have different shapes");
    }
  }
  for (std::size_t a = 0; a < points_.size(); ++a) {
    for (std::size_t b = a + 1; b < points_.size(); ++b) {
      if (point_distance(points_[a], points_[b]) <= duplicate_tol) {
        throw InputError("support set: duplicate points " + std::to_string(a) + " and " + std::to_string(b));
      }
    }
  }
}

std::pair<Point, Point> swap_points(const Point& y, const Point& y_tilde, const Bipartition& p) {
  if (y.size() != y_tilde.size() || static_cast<int>(y.size()) != p.marginals()) {
    throw InputError("swap_points: shape mismatch");
  }
  Point z = y;
  Point z_tilde = y_tilde;
  for (int i : p.minus) {
    z[static_cast<std::size_t>(i)] = y_tilde[static_cast<std::size_t>(i)];
    z_tilde[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
  }
  return {std::move(z), std::move(z_tilde)};
}

double monotonicity_defect(const CostSpec& cost, const Point& y, const Point& y_tilde, const Bipartition& p) {
  const auto [z, z_tilde] = swap_points(y, y_tilde, p);
  return evaluate(cost, y) + evaluate(cost, y_tilde) - evaluate(cost, z) - evaluate(cost, z_tilde);
}

MonotonicityReport c_monotone_violations(const CostSpec& cost, const SupportSet& support, const Bipartition& p,
                                         double tol) {
  MonotonicityReport report;
  report.partition = p;
  const auto& pts = support.points();
  std::vector<double> values(pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a) values[a] = evaluate(cost, pts[a]);
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const auto [z, z_tilde] = swap_points(pts[a], pts[b], p);
      const double defect = values[a] + values[b] - evaluate(cost, z) - evaluate(cost, z_tilde);
      ++report.pairs_checked;
      report.max_defect = std::max(report.max_defect, defect);
      if (defect > tol) report.violations.push_back({a, b, defect});
    }
  }
  return report;
}

double default_violation_tol(const CostSpec& cost, const SupportSet& support) {
  double scale = 1.0;
  for (const auto& p : support.points()) scale = std::max(scale, std::abs(evaluate(cost, p)));
  return 1e-9 * scale;
}

std::string to_string(Sign s) {
  switch (s) {
    case Sign::negative:
      return "-1";
    case Sign::positive:
      return "+1";
    case Sign::indeterminate:
      break;
  }
  return "indeterminate";
}

TwoMonotoneResult two_monotone_sign(const CostSpec& cost, int i, int j, const Box& box, int samples,
                                    std::uint64_t seed) {
  require_scalar_marginals(cost, "two_monotone_sign");
  const int m = cost.marginals();
  if (i < 0 || j < 0 || i >= m || j >= m || i == j) throw InputError("two_monotone_sign: invalid pair");
  if (static_cast<int>(box.lo.size()) != m || static_cast<int>(box.hi.size()) != m) {
    throw InputError("two_monotone_sign: box must have one interval per marginal");
  }
  for (int k = 0; k < m; ++k) {
    if (!(box.lo[static_cast<std::size_t>(k)] < box.hi[static_cast<std::size_t>(k)])) {
      throw InputError("two_monotone_sign: box intervals must have lo < hi");
    }
  }
  if (samples < 100) throw InputError("two_monotone_sign: at least 100 samples");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TwoMonotoneResult result;
  result.samples = samples;
  int negative = 0;
  int positive = 0;
  const auto ui = static_cast<std::size_t>(i);
  const auto uj = static_cast<std::size_t>(j);
  std::vector<double> x(static_cast<std::size_t>(m));
  for (int sample = 0; sample < samples; ++sample) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * unit(rng);
    const double t = (box.hi[ui] - x[ui]) * (1.0 - unit(rng));
    const double s = (box.hi[uj] - x[uj]) * (1.0 - unit(rng));
    auto at = [&](double dt, double ds) {
      auto y = x;
      y[ui] += dt;
      y[uj] += ds;
      return evaluate(cost, scalar_point(y));
    };
    const double c00 = at(0, 0);
    const double c11 = at(t, s);
    const double c10 = at(t, 0);
    const double c01 = at(0, s);
    const double defect = c00 + c11 - c10 - c01;
    const double noise =
        64.0 * std::numeric_limits<double>::epsilon() * (std::abs(c00) + std::abs(c11) + std::abs(c10) + std::abs(c01));
    result.max_defect = std::max(result.max_defect, defect);
    result.min_defect = std::min(result.min_defect, defect);
    if (defect < -noise) ++negative;
    if (defect > noise) ++positive;
  }
  if (negative == samples) result.sampled = Sign::negative;
  if (positive == samples) result.sampled = Sign::positive;

  result.sign = result.sampled;
  if (cost.is_builtin()) {
    result.mixed_partial = mixed_partial_sign(cost, i, j, box);
    if (!result.mixed_partial || *result.mixed_partial != result.sampled) result.sign = Sign::indeterminate;
  }
  return result;
}

CompatibilityReport compatibility_check(const CostSpec& cost, const Box& box, int samples, std::uint64_t seed) {
  const int m = cost.marginals();
  CompatibilityReport report;
  report.signs = Eigen::MatrixXi::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const Sign s = two_monotone_sign(cost, i, j, box, samples, seed).sign;
      report.signs(i, j) = report.signs(j, i) = static_cast<int>(s);
      if (s == Sign::indeterminate && !report.offending_pair) report.offending_pair = std::make_pair(i, j);
    }
  }
  if (report.offending_pair) return report;
  report.conclusive = true;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      for (int k = j + 1; k < m; ++k) {
        // Signs are +-1, so dividing by sgn_ik equals multiplying by it.
        if (report.signs(i, j) * report.signs(j, k) * report.signs(i, k) != -1) {
          report.failing_triples.push_back({i, j, k});
        }
      }
    }
  }
  report.compatible = report.failing_triples.empty();
  return report;
}

ProjectionReport projection_monotone_check(const SupportSet& support, int j, double tol) {
  ProjectionReport report;
  const auto& pts = support.points();
  if (pts.empty()) return report;
  const int m = static_cast<int>(pts.front().size());
  if (j < 0 || j >= m) throw InputError("projection_monotone_check: marginal index out of range");
  for (const auto& p : pts) {
    for (const auto& v : p) {
      if (v.size() != 1) throw InputError("projection_monotone_check: requires one-dimensional marginals");
    }
  }
  const auto uj = static_cast<std::size_t>(j);
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const double product = (pts[a][0](0) - pts[b][0](0)) * (pts[a][uj](0) - pts[b][uj](0));
      report.min_product = std::min(report.min_product, product);
      if (product < -tol) {
        report.monotone = false;
        report.witnesses.emplace_back(a, b);
      }
    }
  }
  return report;
}

}  // namespace mmot
