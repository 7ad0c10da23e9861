#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccopf {

enum class RowSense { less_equal, greater_equal, equal };

/// min cost.x  s.t.  a.x (sense) rhs,  lower <= x <= upper.
/// Bounds may be infinite; `tags` label rows for diagnostics.
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::MatrixXd a;
  std::vector<RowSense> sense;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<std::string> tags;

  /// All variables free, no rows.
  explicit LinearProgram(Eigen::Index num_vars = 0);
  Eigen::Index add_row(const Eigen::VectorXd& coeffs, RowSense s, double b, std::string tag = {});
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  /// Lagrange multipliers, one per row, for the row written as g(x) <= 0
  /// (g = a.x - rhs for <= and ==, g = rhs - a.x for >=). Nonnegative on
  /// inequality rows at an optimum.
  Eigen::VectorXd duals;
  Eigen::VectorXd reduced_costs;  // cost + a^T duals (sign-adjusted per row)
  double objective = 0.0;
  double dual_objective = 0.0;
  /// Rows supporting a Farkas certificate when infeasible.
  std::vector<std::size_t> infeasible_rows;
  int iterations = 0;
  /// Some basic variable sits at a bound, so the duals may not be unique.
  bool degenerate = false;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int refactor_interval = 40;
  int max_iterations = 20000;
};

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

}  // namespace ccopf
