#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmot/cost_model.hpp"
#include "mmot/metric_engine.hpp"

namespace mmot {

/// Finite set of points of the product space, optionally carrying masses.
class SupportSet {
 public:
  SupportSet() = default;
  /// Throws InputError on an empty set, ragged points or duplicates within `duplicate_tol`.
  explicit SupportSet(std::vector<Point> points, std::vector<double> masses = {}, double duplicate_tol = 1e-12);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& operator[](std::size_t k) const { return points_[k]; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  std::vector<Point> points_;
  std::vector<double> masses_;
};

struct MonotonicityViolation {
  std::size_t first = 0;
  std::size_t second = 0;
  double defect = 0.0;
};

struct MonotonicityReport {
  Bipartition partition;
  std::vector<MonotonicityViolation> violations;
  double max_defect = -INFINITY;
  std::size_t pairs_checked = 0;
};

/// The two swapped points (z, z~) for y, y~ and partition p: z takes y on p_plus and y~ on p_minus.
std::pair<Point, Point> swap_points(const Point& y, const Point& y_tilde, const Bipartition& p);

/// Defect c(y) + c(y~) - c(z) - c(z~); c-monotone pairs have defect <= 0.
double monotonicity_defect(const CostSpec& cost, const Point& y, const Point& y_tilde, const Bipartition& p);

MonotonicityReport c_monotone_violations(const CostSpec& cost, const SupportSet& support, const Bipartition& p,
                                         double tol);

/// 1e-9 times the largest |c| over the support (at least 1e-9).
double default_violation_tol(const CostSpec& cost, const SupportSet& support);

enum class Sign { negative = -1, indeterminate = 0, positive = 1 };

std::string to_string(Sign s);

/// Axis-aligned box of R^m for one-dimensional marginals.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct TwoMonotoneResult {
  Sign sign = Sign::indeterminate;
  Sign sampled = Sign::indeterminate;  // verdict from sampled defects alone
  std::optional<Sign> mixed_partial;   // uniform sign of d2c/dx_i dx_j on a grid (builtins only)
  int samples = 0;
  double max_defect = -INFINITY;
  double min_defect = INFINITY;
};

/// Sign of c(x) + c(x + t e_i + s e_j) - c(x + t e_i) - c(x + s e_j) over random x in the box and
/// s, t > 0; it has the sign of the mixed partial, so -x_i x_j gives Sign::negative.
TwoMonotoneResult two_monotone_sign(const CostSpec& cost, int i, int j, const Box& box, int samples,
                                    std::uint64_t seed = 42);

struct CompatibilityReport {
  bool conclusive = false;
  bool compatible = false;
  Eigen::MatrixXi signs;                              // pairwise signs, 0 = indeterminate
  std::optional<std::pair<int, int>> offending_pair;  // first indeterminate pair
  std::vector<std::array<int, 3>> failing_triples;    // product of signs != -1
};

/// Checks sgn_ij sgn_jk / sgn_ik = -1 for every triple of distinct marginals.
CompatibilityReport compatibility_check(const CostSpec& cost, const Box& box, int samples, std::uint64_t seed = 42);

struct ProjectionReport {
  bool monotone = true;
  std::vector<std::pair<std::size_t, std::size_t>> witnesses;
  double min_product = INFINITY;
};

/// True iff (x_1 - y_1)(x_j - y_j) >= -tol for all pairs of support points (1-D marginals).
ProjectionReport projection_monotone_check(const SupportSet& support, int j, double tol = 0.0);

}  // namespace mmot
