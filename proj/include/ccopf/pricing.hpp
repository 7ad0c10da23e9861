#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccopf/case_model.hpp"
#include "ccopf/formulation.hpp"
#include "ccopf/solver.hpp"

namespace ccopf {

/// per_bus       - LMP_i = -l1 - sum_j (l7_j - l8_j) G_ji and the exact per-bus
///                 derivative of the Lagrangian in sigma_i.
/// paper_literal - the literal expressions: shift factors summed over buses
///                 inside the LMP, and one flow ratio shared by all buses in
///                 the LPV. Kept for side-by-side comparison only.
enum class PricingForm { per_bus, paper_literal };

const char* to_string(PricingForm f);

/// $/MWh per bus position. Throws InputError when the solution has no duals.
Eigen::VectorXd lmp(const DispatchSolution& solution, const ShiftFactorMatrix& gamma,
                    PricingForm form = PricingForm::per_bus);

struct LpvResult {
  Eigen::VectorXd lpv;          // $/MWh per MW of standard deviation, per bus position
  std::vector<bool> one_sided;  // right-hand derivative at a square-root kink
};

LpvResult lpv_analytic(const CcOpfProblem& problem, const DispatchSolution& solution,
                       PricingForm form = PricingForm::per_bus);

struct EmpiricalLpv {
  int bus = 0;
  double value = 0.0;
  double cost_plus = 0.0;
  double cost_minus = 0.0;  // cost at sigma itself when one_sided
  bool one_sided = false;   // sigma < delta: forward difference
  bool basis_change = false;  // binding set differs across the perturbation
};

/// Central difference of the total cost in sigma at `bus` with two full
/// re-solves. Throws SolveError naming the side whose solve failed.
EmpiricalLpv lpv_empirical(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant, VarianceMode mode,
                           int bus, double delta = 0.05, const SolverOptions& opts = {});

struct OracleRow {
  int bus = 0;
  double analytic = 0.0;
  double empirical = 0.0;
  double rel_error = 0.0;  // |a - e| / max(1, |e|)
  bool kink = false;
  bool basis_change = false;

  bool flagged() const { return kink || basis_change; }
};

/// Empirical LPV at every bus, solved concurrently, compared against the
/// analytic vector of the base solve.
std::vector<OracleRow> oracle_sweep(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant,
                                    VarianceMode mode, double delta = 0.05, const SolverOptions& opts = {});

struct PriceReport {
  Variant variant = Variant::with_reserves;
  VarianceMode mode = VarianceMode::covariance;
  PricingForm form = PricingForm::per_bus;
  double epsilon_a = 0.0;
  double epsilon_br = 0.0;
  std::vector<int> bus_ids;
  Eigen::VectorXd lmp;
  Eigen::VectorXd lpv;
  std::vector<bool> lpv_one_sided;
  std::vector<std::string> binding;  // tags of the binding rows
  DispatchSolution solution;
  CcOpfProblem problem;
};

PriceReport price_report(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant, VarianceMode mode,
                         PricingForm form = PricingForm::per_bus, const SolverOptions& opts = {});

/// Tag such as "flow_upper[2-5]" naming a row by its generator bus or branch ends.
std::string row_tag(const CcOpfProblem& problem, std::size_t row);

}  // namespace ccopf
