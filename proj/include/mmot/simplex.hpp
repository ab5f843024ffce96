#pragma once

#include <string>
#include <vector>

namespace mmot {

/// Column of the constraint matrix in coordinate form.
struct SparseColumn {
  std::vector<int> rows;
  std::vector<double> values;
};

/// min c'x subject to Ax = b, x >= 0, with b >= 0.
struct LinearProgram {
  int rows = 0;
  std::vector<double> rhs;
  std::vector<double> cost;
  std::vector<SparseColumn> columns;
};

struct SimplexOptions {
  double tol = 1e-9;
  long max_pivots = 1'000'000;
  int refactor_every = 64;
};

struct SimplexResult {
  std::vector<double> x;
  std::vector<double> duals;  // y with A'y <= c at optimality
  double objective = 0.0;
  std::vector<int> basis;  // column index per row; -1 - r for an artificial left in row r
  long pivots = 0;
};

/// Two-phase revised primal simplex with Bland's rule and a dense basis inverse
/// refactorized every `refactor_every` pivots. Throws NumericalError on infeasibility,
/// unboundedness or when the pivot limit is hit.
SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace mmot
