#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccopf/case_model.hpp"
#include "ccopf/network.hpp"
#include "ccopf/quantile.hpp"

namespace ccopf {

enum class Variant { with_reserves, without_reserves };

/// How the standard deviation of a recourse-adjusted branch flow is computed.
///  covariance    - exact: sqrt(sum_k (G_k - t)^2 s_k^2), t = sum_i G_i b_i.
///  paper_literal - literal radicand, clamped at zero, with the literal
///                  asymmetric lower-side flow constraint.
enum class VarianceMode { covariance, paper_literal };

enum class ConstraintKind {
  balance,
  gen_min,
  gen_max,
  beta_nonneg,
  beta_sum,
  reserve_adequacy,
  flow_upper,
  flow_lower,
};

const char* to_string(Variant v);
const char* to_string(VarianceMode m);
const char* to_string(ConstraintKind k);

/// One row of the assembled problem:
///   coeffs . x + std_sign * x_br * flow_std(row of gamma, beta)  (<= or ==)  rhs
/// For the without-reserves variant the chance-constraint margin is a constant,
/// already subtracted from `rhs` and kept in `tightening`:
///   tightening = quantile * sqrt(sum_i weights_i^2 sigma_i^2).
struct Constraint {
  ConstraintKind kind = ConstraintKind::balance;
  std::size_t index = 0;  // generator index, or row of the problem's gamma
  Eigen::VectorXd coeffs;
  bool equality = false;
  double rhs = 0.0;
  int std_sign = 0;
  double tightening = 0.0;
  double tightening_quantile = 0.0;
  Eigen::VectorXd tightening_weights;  // per bus; empty when no constant margin
};

/// Standard deviation of one branch's recourse-adjusted flow at a given beta.
struct FlowStdTerm {
  std::size_t branch = 0;  // row of the problem's gamma
  double value = 0.0;      // MW
  double radicand = 0.0;
  bool clamped = false;    // paper_literal radicand went negative and was clamped
};

struct CcOpfProblem {
  Variant variant = Variant::with_reserves;
  VarianceMode mode = VarianceMode::covariance;
  bool chance_constrained = true;
  Quantile quantile_a;
  Quantile quantile_br;

  NetworkCase net;
  std::vector<std::size_t> gen_bus;    // bus position of each generator
  ShiftFactorMatrix gamma;             // rated branches; nominal flows and flow_std use this
  std::vector<double> ratings;         // per gamma row
  Eigen::VectorXd sigma;               // per bus, MW
  Eigen::VectorXd load;                // per bus, MW

  Eigen::VectorXd cost;
  std::vector<Constraint> rows;

  std::size_t num_generators() const { return gen_bus.size(); }
  std::size_t num_buses() const { return net.buses.size(); }
  bool has_reserves() const { return variant == Variant::with_reserves; }
  std::size_t num_vars() const { return has_reserves() ? 3 * gen_bus.size() : gen_bus.size(); }
  std::size_t p_var(std::size_t g) const { return g; }
  std::size_t a_var(std::size_t g) const { return gen_bus.size() + g; }
  std::size_t beta_var(std::size_t g) const { return 2 * gen_bus.size() + g; }

  /// Participation shares aggregated to bus positions.
  Eigen::VectorXd beta_by_bus(const Eigen::VectorXd& x) const;
  /// True when any row carries the beta-dependent flow deviation.
  bool is_nonlinear() const;
};

struct AssemblyOptions {
  VarianceMode mode = VarianceMode::covariance;
  /// false assembles the deterministic counterpart (all margins zero).
  bool chance_constrained = true;
};

/// Regulation capacity generator i must hold: x_a * beta_i * ||sigma||_2.
double reserve_requirement(double beta_i, std::span<const double> sigma, double x_a);

/// Flow deviation of one branch; `beta` is indexed by bus position.
FlowStdTerm flow_std(std::span<const double> gamma_row, std::span<const double> beta, std::span<const double> sigma,
                     VarianceMode mode);

/// flow_std together with its partial derivatives with respect to the
/// per-bus participation shares and the per-bus sigmas. Derivatives are zero
/// where the deviation is zero or clamped.
struct FlowStdDerivatives {
  FlowStdTerm term;
  Eigen::VectorXd d_beta;
  Eigen::VectorXd d_sigma;
};
FlowStdDerivatives flow_std_derivatives(const Eigen::Ref<const Eigen::VectorXd>& gamma_row,
                                        const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma,
                                        VarianceMode mode);

CcOpfProblem assemble_with_reserves(const NetworkCase& net, const ShiftFactorMatrix& gamma,
                                    const UncertaintyConfig& ucfg, const AssemblyOptions& opts = {});

CcOpfProblem assemble_without_reserves(const NetworkCase& net, const ShiftFactorMatrix& gamma,
                                       const GenWeightMatrix& d, const UncertaintyConfig& ucfg,
                                       const AssemblyOptions& opts = {});

/// Convenience: builds shift factors and d from the case and assembles `variant`.
CcOpfProblem assemble(const NetworkCase& net, Variant variant, const UncertaintyConfig& ucfg,
                      const AssemblyOptions& opts = {});

// Row evaluation. g(x) = lhs(x) - rhs, so g <= 0 (or == 0) is the constraint.
double row_residual(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x);
Eigen::VectorXd row_gradient(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x);

/// dg/dsigma_i for every bus. Where the margin's square root sits at zero the
/// right-hand derivative is returned and `one_sided` is set.
struct SigmaGradient {
  Eigen::VectorXd grad;
  bool one_sided = false;
};
SigmaGradient row_sigma_gradient(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x);

/// Human-readable constraint listing.
std::string dump_problem(const CcOpfProblem& p);

}  // namespace ccopf
