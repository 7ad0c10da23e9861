#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccopf/formulation.hpp"
#include "ccopf/lp.hpp"

namespace ccopf {

/// Outer-loop constants for the sequential linearization. The defaults are
/// the documented values; they are not tuned per case.
struct SolverOptions {
  double initial_radius = 0.25;     // trust region on beta moves (max-norm)
  int max_iterations = 100;
  double beta_tolerance = 1e-6;
  double objective_tolerance = 1e-7;  // relative
  double binding_tolerance = 1e-6;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;       // true objective of the current iterate after this step
  double model_objective = 0.0; // LP subproblem optimum
  double max_beta_step = 0.0;
  double radius = 0.0;
  bool accepted = false;
  std::vector<std::size_t> clamped_branches;  // gamma rows with a clamped literal radicand
};

/// Multipliers grouped by constraint kind, in the convention
/// L = f + sum lambda_r g_r(x), g_r <= 0, lambda_r >= 0 on inequalities.
struct Duals {
  double balance = 0.0;            // lambda1, $/MWh
  Eigen::VectorXd gen_min;         // lambda2, per generator
  Eigen::VectorXd gen_max;         // lambda3
  Eigen::VectorXd beta_nonneg;     // lambda4
  double beta_sum = 0.0;           // lambda5
  Eigen::VectorXd reserve;         // lambda6, $/MW
  Eigen::VectorXd flow_upper;      // lambda7, per gamma row
  Eigen::VectorXd flow_lower;      // lambda8
};

struct DispatchSolution {
  Variant variant = Variant::with_reserves;
  VarianceMode mode = VarianceMode::covariance;
  Eigen::VectorXd x;       // full variable vector of the problem
  Eigen::VectorXd p_g;     // MW
  Eigen::VectorXd a_cap;   // MW (zeros without reserves)
  Eigen::VectorXd beta;    // shares (zeros without reserves)
  double objective_energy = 0.0;
  double objective_reserve = 0.0;
  Duals duals;
  Eigen::VectorXd row_duals;           // aligned with problem.rows
  std::vector<std::size_t> binding;    // indices into problem.rows
  std::vector<FlowStdTerm> flow_std;   // per gamma row, at the solution
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  double multiplier_residual = 0.0;    // stationarity left after the multiplier fit
  std::vector<IterationRecord> trace;

  double total_cost() const { return objective_energy + objective_reserve; }
};

/// Solves the assembled problem. Linear problems take one simplex solve;
/// problems with beta-dependent flow deviations use sequential linearization
/// with a trust region on beta. Throws SolveError when infeasible.
DispatchSolution solve_ccopf(const CcOpfProblem& problem, const SolverOptions& opts = {});

struct KktReport {
  double stationarity = 0.0;          // max |grad f + sum lambda grad g|
  double complementarity = 0.0;       // max |lambda_r g_r|
  double primal_infeasibility = 0.0;  // max violation
  double dual_sign = 0.0;             // max negative multiplier on an inequality

  double max_residual() const;
};

KktReport verify_kkt(const CcOpfProblem& problem, const DispatchSolution& solution);

/// Rows of `problem` active at `x` within `tol` (relative to 1 + |rhs|).
std::vector<std::size_t> binding_rows(const CcOpfProblem& problem, const Eigen::VectorXd& x, double tol);

/// One line per outer iteration: objective, max beta step, radius, clamp events.
std::string format_trace(const DispatchSolution& solution);

}  // namespace ccopf
