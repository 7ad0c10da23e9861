#include "ccopf/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

bool depends_on_sigma(const CcOpfProblem& p, const Constraint& row) {
  return (row.kind == ConstraintKind::reserve_adequacy && p.has_reserves()) || row.tightening_weights.size() > 0 ||
         row.std_sign != 0;
}

// The literal LPV: a reserve term carrying the literal sign and, per branch,
// a single ratio x_br * sum_i sigma_i (G_i^2 (1-b_i)^2 - sum_{k!=i} G_k^2 b_k^2) / sqrt(literal radicand)
// applied to every bus alike.
Eigen::VectorXd lpv_literal(const CcOpfProblem& p, const DispatchSolution& s) {
  const auto nb = idx(p.num_buses());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nb);
  const double norm = p.sigma.norm();
  if (p.has_reserves() && norm > 0.0) {
    double weighted = 0.0;
    for (std::size_t g = 0; g < p.num_generators(); ++g) weighted += s.duals.reserve(idx(g)) * s.beta(idx(g));
    out += -p.quantile_a.x * weighted * p.sigma / norm;
  }
  if (!p.has_reserves()) return out;

  const Eigen::VectorXd b = p.beta_by_bus(s.x);
  double shared = 0.0;
  for (Eigen::Index j = 0; j < p.gamma.gamma.rows(); ++j) {
    const double weight = s.duals.flow_upper(j) - s.duals.flow_lower(j);
    if (weight == 0.0) continue;
    const Eigen::VectorXd gj = p.gamma.gamma.row(j).transpose();
    const Eigen::ArrayXd g2 = gj.array().square();
    const Eigen::ArrayXd gb2 = g2 * b.array().square();
    double num = 0.0;
    double rad = 0.0;
    for (Eigen::Index i = 0; i < nb; ++i) {
      const double others = gb2.sum() - gb2(i);
      num += p.sigma(i) * (g2(i) * std::pow(1.0 - b(i), 2) - others);
      const double sig_others = p.sigma.squaredNorm() - p.sigma(i) * p.sigma(i);
      rad += g2(i) * std::pow(1.0 - b(i), 2) * p.sigma(i) * p.sigma(i) - gb2(i) * sig_others;
    }
    if (rad > 0.0) shared += weight * p.quantile_br.x * num / std::sqrt(rad);
  }
  out.array() += shared;
  return out;
}

}  // namespace

const char* to_string(PricingForm f) { return f == PricingForm::per_bus ? "per-bus" : "paper-literal"; }

Eigen::VectorXd lmp(const DispatchSolution& s, const ShiftFactorMatrix& gamma, PricingForm form) {
  if (s.row_duals.size() == 0 || s.duals.flow_upper.size() != gamma.gamma.rows())
    throw InputError("solution carries no duals for this shift-factor matrix");
  const Eigen::VectorXd w = s.duals.flow_upper - s.duals.flow_lower;
  const auto nb = gamma.gamma.cols();
  if (form == PricingForm::paper_literal) {
    const double c = w.dot(gamma.gamma.rowwise().sum());
    return Eigen::VectorXd::Constant(nb, -s.duals.balance - c);
  }
  Eigen::VectorXd out = -(gamma.gamma.transpose() * w);
  out.array() -= s.duals.balance;
  return out;
}

LpvResult lpv_analytic(const CcOpfProblem& p, const DispatchSolution& s, PricingForm form) {
  if (s.row_duals.size() != idx(p.rows.size())) throw InputError("solution carries no duals for this problem");
  const auto nb = idx(p.num_buses());
  LpvResult out{Eigen::VectorXd::Zero(nb), std::vector<bool>(static_cast<std::size_t>(nb), false)};

  bool priced_rows = false;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const double lam = s.row_duals(idx(r));
    const auto& row = p.rows[r];
    if (lam == 0.0 || !depends_on_sigma(p, row)) continue;
    priced_rows = true;
    const auto sg = row_sigma_gradient(p, row, s.x);
    out.lpv += lam * sg.grad;
    if (sg.one_sided)
      for (Eigen::Index i = 0; i < nb; ++i)
        if (sg.grad(i) != 0.0) out.one_sided[static_cast<std::size_t>(i)] = true;
  }
  if (priced_rows)
    for (Eigen::Index i = 0; i < nb; ++i)
      if (p.sigma(i) == 0.0) out.one_sided[static_cast<std::size_t>(i)] = true;

  if (form == PricingForm::paper_literal) out.lpv = lpv_literal(p, s);
  return out;
}

EmpiricalLpv lpv_empirical(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant, VarianceMode mode,
                           int bus, double delta, const SolverOptions& opts) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  const auto pos = net.find_bus(bus);
  if (!pos) throw InputError(fmt::format("unknown bus {}", bus));
  const double sigma = net.buses[*pos].sigma;

  AssemblyOptions ao;
  ao.mode = mode;
  auto solve_at = [&](double value, const char* side) {
    NetworkCase c = net;
    c.buses[c.bus_index(bus)].sigma = value;
    try {
      const auto p = assemble(c, variant, ucfg, ao);
      auto sol = solve_ccopf(p, opts);
      if (!sol.converged) throw SolveError("did not converge");
      return sol;
    } catch (const SolveError& e) {
      throw SolveError(fmt::format("{} perturbation at bus {} failed: {}", side, bus, e.what()));
    }
  };

  EmpiricalLpv out;
  out.bus = bus;
  const auto plus = solve_at(sigma + delta, "+delta");
  out.cost_plus = plus.total_cost();
  if (sigma >= delta) {
    const auto minus = solve_at(sigma - delta, "-delta");
    out.cost_minus = minus.total_cost();
    out.value = (out.cost_plus - out.cost_minus) / (2.0 * delta);
    out.basis_change = plus.binding != minus.binding;
  } else {
    const auto base = solve_at(sigma, "base");
    out.cost_minus = base.total_cost();
    out.value = (out.cost_plus - out.cost_minus) / delta;
    out.one_sided = true;
    out.basis_change = plus.binding != base.binding;
  }
  return out;
}

std::vector<OracleRow> oracle_sweep(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant,
                                    VarianceMode mode, double delta, const SolverOptions& opts) {
  const auto base = price_report(net, ucfg, variant, mode, PricingForm::per_bus, opts);
  std::vector<std::future<EmpiricalLpv>> jobs;
  for (const auto& b : net.buses)
    jobs.push_back(std::async(std::launch::async, [&, id = b.id] {
      return lpv_empirical(net, ucfg, variant, mode, id, delta, opts);
    }));

  std::vector<OracleRow> rows;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto e = jobs[i].get();
    OracleRow r;
    r.bus = e.bus;
    r.analytic = base.lpv(idx(i));
    r.empirical = e.value;
    r.rel_error = std::abs(r.analytic - r.empirical) / std::max(1.0, std::abs(r.empirical));
    r.kink = e.one_sided || base.lpv_one_sided[i];
    r.basis_change = e.basis_change;
    rows.push_back(r);
  }
  return rows;
}

std::string row_tag(const CcOpfProblem& p, std::size_t r) {
  const auto& row = p.rows[r];
  switch (row.kind) {
    case ConstraintKind::balance:
    case ConstraintKind::beta_sum:
      return to_string(row.kind);
    case ConstraintKind::flow_upper:
    case ConstraintKind::flow_lower: {
      const auto& br = p.net.branches[p.gamma.branches[row.index]];
      return fmt::format("{}[{}-{}]", to_string(row.kind), br.from_bus, br.to_bus);
    }
    default:
      return fmt::format("{}[g{}@{}]", to_string(row.kind), row.index + 1, p.net.generators[row.index].bus);
  }
}

PriceReport price_report(const NetworkCase& net, const UncertaintyConfig& ucfg, Variant variant, VarianceMode mode,
                         PricingForm form, const SolverOptions& opts) {
  ucfg.validate();
  AssemblyOptions ao;
  ao.mode = mode;
  PriceReport rep;
  rep.problem = assemble(net, variant, ucfg, ao);
  rep.solution = solve_ccopf(rep.problem, opts);
  rep.variant = variant;
  rep.mode = mode;
  rep.form = form;
  rep.epsilon_a = ucfg.epsilon_a;
  rep.epsilon_br = ucfg.epsilon_br;
  for (const auto& b : net.buses) rep.bus_ids.push_back(b.id);
  rep.lmp = lmp(rep.solution, rep.problem.gamma, form);
  auto lpv = lpv_analytic(rep.problem, rep.solution, form);
  rep.lpv = lpv.lpv;
  rep.lpv_one_sided = lpv.one_sided;
  for (auto r : rep.solution.binding) rep.binding.push_back(row_tag(rep.problem, r));
  return rep;
}

}  // namespace ccopf
