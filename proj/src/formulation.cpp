#include "ccopf/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace ccopf {

const char* to_string(Variant v) {
  return v == Variant::with_reserves ? "with-reserves" : "without-reserves";
}

const char* to_string(VarianceMode m) {
  return m == VarianceMode::covariance ? "covariance" : "paper-literal";
}

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::balance: return "balance";
    case ConstraintKind::gen_min: return "gen_min";
    case ConstraintKind::gen_max: return "gen_max";
    case ConstraintKind::beta_nonneg: return "beta_nonneg";
    case ConstraintKind::beta_sum: return "beta_sum";
    case ConstraintKind::reserve_adequacy: return "reserve_adequacy";
    case ConstraintKind::flow_upper: return "flow_upper";
    case ConstraintKind::flow_lower: return "flow_lower";
  }
  return "?";
}

Eigen::VectorXd CcOpfProblem::beta_by_bus(const Eigen::VectorXd& x) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_buses()));
  if (!has_reserves()) return b;
  for (std::size_t g = 0; g < gen_bus.size(); ++g)
    b(static_cast<Eigen::Index>(gen_bus[g])) += x(static_cast<Eigen::Index>(beta_var(g)));
  return b;
}

bool CcOpfProblem::is_nonlinear() const {
  return std::any_of(rows.begin(), rows.end(), [](const Constraint& r) { return r.std_sign != 0; });
}

double reserve_requirement(double beta_i, std::span<const double> sigma, double x_a) {
  const double sumsq = std::inner_product(sigma.begin(), sigma.end(), sigma.begin(), 0.0);
  return x_a * beta_i * std::sqrt(sumsq);
}

FlowStdDerivatives flow_std_derivatives(const Eigen::Ref<const Eigen::VectorXd>& gamma_row,
                                        const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma,
                                        VarianceMode mode) {
  const auto n = gamma_row.size();
  FlowStdDerivatives out{{}, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const Eigen::VectorXd s2 = sigma.array().square();

  if (mode == VarianceMode::covariance) {
    const double t = gamma_row.dot(beta);
    const Eigen::VectorXd dev = gamma_row.array() - t;
    const double var = (dev.array().square() * s2.array()).sum();
    out.term.radicand = var;
    out.term.value = std::sqrt(var);
    if (out.term.value > 0.0) {
      const double weighted = (dev.array() * s2.array()).sum();
      out.d_beta = -gamma_row * (weighted / out.term.value);
      out.d_sigma = (dev.array().square() * sigma.array()).matrix() / out.term.value;
    }
    return out;
  }

  // Literal radicand: sum_i G_i^2 (1-b_i)^2 s_i^2 - sum_i G_i^2 b_i^2 (S - s_i^2), S = sum_k s_k^2.
  const double total = s2.sum();
  const Eigen::ArrayXd g2 = gamma_row.array().square();
  const Eigen::ArrayXd one_minus = 1.0 - beta.array();
  const Eigen::ArrayXd others = total - s2.array();
  const double rad = (g2 * one_minus.square() * s2.array()).sum() - (g2 * beta.array().square() * others).sum();
  out.term.radicand = rad;
  if (rad < 0.0) {
    out.term.clamped = true;
    return out;
  }
  out.term.value = std::sqrt(rad);
  if (out.term.value > 0.0) {
    const double inv = 0.5 / out.term.value;
    out.d_beta = ((-2.0 * g2 * one_minus * s2.array() - 2.0 * g2 * beta.array() * others) * inv).matrix();
    const Eigen::ArrayXd gb2 = g2 * beta.array().square();
    const double gb2_total = gb2.sum();
    // d/ds_k: the k-th own term, minus every other bus's penalty term (which contains s_k^2).
    out.d_sigma = ((2.0 * g2 * one_minus.square() * sigma.array() - 2.0 * sigma.array() * (gb2_total - gb2)) * inv)
                      .matrix();
  }
  return out;
}

FlowStdTerm flow_std(std::span<const double> gamma_row, std::span<const double> beta, std::span<const double> sigma,
                     VarianceMode mode) {
  if (gamma_row.size() != beta.size() || beta.size() != sigma.size())
    throw InputError("flow_std: gamma row, beta and sigma must have equal length");
  const auto n = static_cast<Eigen::Index>(gamma_row.size());
  const Eigen::Map<const Eigen::VectorXd> g(gamma_row.data(), n);
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), n);
  const Eigen::Map<const Eigen::VectorXd> s(sigma.data(), n);
  return flow_std_derivatives(g, b, s, mode).term;
}

namespace {

CcOpfProblem base_problem(const NetworkCase& net, const ShiftFactorMatrix& gamma, const UncertaintyConfig& ucfg,
                          const AssemblyOptions& opts, Variant variant) {
  if (auto v = validate_case(net); !v.empty()) throw CaseValidationError(std::move(v));
  ucfg.validate();
  if (gamma.gamma.cols() != static_cast<Eigen::Index>(net.buses.size()))
    throw InputError("shift-factor matrix does not match the case");

  CcOpfProblem p;
  p.variant = variant;
  p.mode = opts.mode;
  p.chance_constrained = opts.chance_constrained;
  p.quantile_a = x_epsilon(ucfg.epsilon_a);
  p.quantile_br = x_epsilon(ucfg.epsilon_br);
  if (!opts.chance_constrained) {
    p.quantile_a.x = 0.0;
    p.quantile_br.x = 0.0;
  }
  p.net = net;
  p.gen_bus = net.generator_bus_indices();

  // Only rated branches get flow rows.
  ShiftFactorMatrix rated;
  rated.slack = gamma.slack;
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < gamma.branches.size(); ++r) {
    const auto& br = net.branches.at(gamma.branches[r]);
    if (br.rating) {
      keep.push_back(static_cast<Eigen::Index>(r));
      rated.branches.push_back(gamma.branches[r]);
      p.ratings.push_back(*br.rating);
    }
  }
  rated.gamma.resize(static_cast<Eigen::Index>(keep.size()), gamma.gamma.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) rated.gamma.row(static_cast<Eigen::Index>(r)) = gamma.gamma.row(keep[r]);
  p.gamma = std::move(rated);

  const auto n_bus = static_cast<Eigen::Index>(net.buses.size());
  p.sigma.resize(n_bus);
  p.load.resize(n_bus);
  for (Eigen::Index i = 0; i < n_bus; ++i) {
    p.sigma(i) = net.buses[static_cast<std::size_t>(i)].sigma;
    p.load(i) = net.buses[static_cast<std::size_t>(i)].load;
  }
  p.cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars()));
  for (std::size_t g = 0; g < p.num_generators(); ++g) {
    p.cost(static_cast<Eigen::Index>(p.p_var(g))) = net.generators[g].cost_energy;
    if (p.has_reserves()) p.cost(static_cast<Eigen::Index>(p.a_var(g))) = net.generators[g].cost_reserve;
  }
  return p;
}

Constraint make_row(const CcOpfProblem& p, ConstraintKind kind, std::size_t index) {
  Constraint c;
  c.kind = kind;
  c.index = index;
  c.coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars()));
  return c;
}

void add_balance(CcOpfProblem& p) {
  auto row = make_row(p, ConstraintKind::balance, 0);
  for (std::size_t g = 0; g < p.num_generators(); ++g) row.coeffs(static_cast<Eigen::Index>(p.p_var(g))) = 1.0;
  row.equality = true;
  row.rhs = p.load.sum();
  p.rows.push_back(std::move(row));
}

// Nominal flow = gamma_j . (P_g at generator buses - load).
Constraint flow_row(const CcOpfProblem& p, std::size_t j, bool upper) {
  auto row = make_row(p, upper ? ConstraintKind::flow_upper : ConstraintKind::flow_lower, j);
  const double sign = upper ? 1.0 : -1.0;
  const auto gj = p.gamma.gamma.row(static_cast<Eigen::Index>(j));
  for (std::size_t g = 0; g < p.num_generators(); ++g)
    row.coeffs(static_cast<Eigen::Index>(p.p_var(g))) = sign * gj(static_cast<Eigen::Index>(p.gen_bus[g]));
  row.rhs = p.ratings[j] + sign * gj.dot(p.load);
  return row;
}

double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& sigma) {
  return std::sqrt((w.array().square() * sigma.array().square()).sum());
}

}  // namespace

CcOpfProblem assemble_with_reserves(const NetworkCase& net, const ShiftFactorMatrix& gamma,
                                    const UncertaintyConfig& ucfg, const AssemblyOptions& opts) {
  CcOpfProblem p = base_problem(net, gamma, ucfg, opts, Variant::with_reserves);
  const std::size_t ng = p.num_generators();
  const double sigma_norm = p.sigma.norm();

  add_balance(p);
  for (std::size_t g = 0; g < ng; ++g) {
    auto lo = make_row(p, ConstraintKind::gen_min, g);
    lo.coeffs(static_cast<Eigen::Index>(p.p_var(g))) = -1.0;
    lo.coeffs(static_cast<Eigen::Index>(p.a_var(g))) = 1.0;
    lo.rhs = -net.generators[g].p_min;
    p.rows.push_back(std::move(lo));
  }
  for (std::size_t g = 0; g < ng; ++g) {
    auto hi = make_row(p, ConstraintKind::gen_max, g);
    hi.coeffs(static_cast<Eigen::Index>(p.p_var(g))) = 1.0;
    hi.coeffs(static_cast<Eigen::Index>(p.a_var(g))) = 1.0;
    hi.rhs = net.generators[g].p_max;
    p.rows.push_back(std::move(hi));
  }
  for (std::size_t g = 0; g < ng; ++g) {
    auto nn = make_row(p, ConstraintKind::beta_nonneg, g);
    nn.coeffs(static_cast<Eigen::Index>(p.beta_var(g))) = -1.0;
    p.rows.push_back(std::move(nn));
  }
  {
    auto sum = make_row(p, ConstraintKind::beta_sum, 0);
    for (std::size_t g = 0; g < ng; ++g) sum.coeffs(static_cast<Eigen::Index>(p.beta_var(g))) = 1.0;
    sum.equality = true;
    sum.rhs = 1.0;
    p.rows.push_back(std::move(sum));
  }
  for (std::size_t g = 0; g < ng; ++g) {
    auto res = make_row(p, ConstraintKind::reserve_adequacy, g);
    res.coeffs(static_cast<Eigen::Index>(p.beta_var(g))) = p.quantile_a.x * sigma_norm;
    res.coeffs(static_cast<Eigen::Index>(p.a_var(g))) = -1.0;
    p.rows.push_back(std::move(res));
  }
  const bool margins = p.quantile_br.x > 0.0;
  for (std::size_t j = 0; j < p.ratings.size(); ++j) {
    auto up = flow_row(p, j, true);
    auto dn = flow_row(p, j, false);
    if (margins) {
      up.std_sign = 1;
      dn.std_sign = p.mode == VarianceMode::paper_literal ? -1 : 1;
    }
    p.rows.push_back(std::move(up));
    p.rows.push_back(std::move(dn));
  }
  return p;
}

CcOpfProblem assemble_without_reserves(const NetworkCase& net, const ShiftFactorMatrix& gamma,
                                       const GenWeightMatrix& d, const UncertaintyConfig& ucfg,
                                       const AssemblyOptions& opts) {
  CcOpfProblem p = base_problem(net, gamma, ucfg, opts, Variant::without_reserves);
  const std::size_t ng = p.num_generators();
  if (d.d.rows() != static_cast<Eigen::Index>(ng) || d.d.cols() != static_cast<Eigen::Index>(p.num_buses()))
    throw InputError("generation weighting matrix does not match the case");

  // Branch margins use shift factors under a p_max-weighted distributed slack.
  const ShiftFactorMatrix spread = reslack(p.gamma, pmax_slack_weights(net));

  add_balance(p);
  for (int side = 0; side < 2; ++side) {
    for (std::size_t g = 0; g < ng; ++g) {
      const bool lower = side == 0;
      auto row = make_row(p, lower ? ConstraintKind::gen_min : ConstraintKind::gen_max, g);
      row.coeffs(static_cast<Eigen::Index>(p.p_var(g))) = lower ? -1.0 : 1.0;
      row.tightening_weights = d.d.row(static_cast<Eigen::Index>(g)).transpose();
      row.tightening_quantile = p.quantile_a.x;
      row.tightening = p.quantile_a.x * weighted_norm(row.tightening_weights, p.sigma);
      row.rhs = (lower ? -net.generators[g].p_min : net.generators[g].p_max) - row.tightening;
      p.rows.push_back(std::move(row));
    }
  }
  for (std::size_t j = 0; j < p.ratings.size(); ++j) {
    for (bool upper : {true, false}) {
      auto row = flow_row(p, j, upper);
      row.tightening_weights = spread.gamma.row(static_cast<Eigen::Index>(j)).transpose();
      row.tightening_quantile = p.quantile_br.x;
      row.tightening = p.quantile_br.x * weighted_norm(row.tightening_weights, p.sigma);
      row.rhs -= row.tightening;
      p.rows.push_back(std::move(row));
    }
  }
  return p;
}

CcOpfProblem assemble(const NetworkCase& net, Variant variant, const UncertaintyConfig& ucfg,
                      const AssemblyOptions& opts) {
  const ShiftFactorMatrix gamma = shift_factors(net, ReferenceBus{net.reference_bus});
  if (variant == Variant::with_reserves) return assemble_with_reserves(net, gamma, ucfg, opts);
  return assemble_without_reserves(net, gamma, gen_weight_matrix(net), ucfg, opts);
}

namespace {

FlowStdDerivatives row_flow_std(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x) {
  return flow_std_derivatives(p.gamma.gamma.row(static_cast<Eigen::Index>(row.index)).transpose(), p.beta_by_bus(x),
                              p.sigma, p.mode);
}

}  // namespace

double row_residual(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x) {
  double lhs = row.coeffs.dot(x);
  if (row.std_sign != 0) lhs += row.std_sign * p.quantile_br.x * row_flow_std(p, row, x).term.value;
  return lhs - row.rhs;
}

Eigen::VectorXd row_gradient(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x) {
  Eigen::VectorXd grad = row.coeffs;
  if (row.std_sign != 0) {
    const auto fs = row_flow_std(p, row, x);
    for (std::size_t g = 0; g < p.num_generators(); ++g)
      grad(static_cast<Eigen::Index>(p.beta_var(g))) +=
          row.std_sign * p.quantile_br.x * fs.d_beta(static_cast<Eigen::Index>(p.gen_bus[g]));
  }
  return grad;
}

SigmaGradient row_sigma_gradient(const CcOpfProblem& p, const Constraint& row, const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(p.num_buses());
  SigmaGradient out{Eigen::VectorXd::Zero(n), false};

  if (row.kind == ConstraintKind::reserve_adequacy && p.has_reserves()) {
    const double beta = x(static_cast<Eigen::Index>(p.beta_var(row.index)));
    const double norm = p.sigma.norm();
    if (norm > 0.0) {
      out.grad = p.quantile_a.x * beta * p.sigma / norm;
    } else {
      out.grad.setConstant(p.quantile_a.x * beta);
      out.one_sided = true;
    }
    return out;
  }

  if (row.tightening_weights.size() == n) {
    const double base = weighted_norm(row.tightening_weights, p.sigma);
    if (base > 0.0) {
      out.grad = row.tightening_quantile *
                 (row.tightening_weights.array().square() * p.sigma.array()).matrix() / base;
    } else {
      out.grad = row.tightening_quantile * row.tightening_weights.cwiseAbs();
      out.one_sided = true;
    }
    return out;
  }

  if (row.std_sign != 0) {
    const auto fs = row_flow_std(p, row, x);
    const double scale = row.std_sign * p.quantile_br.x;
    if (fs.term.value > 0.0) {
      out.grad = scale * fs.d_sigma;
    } else if (!fs.term.clamped) {
      // Zero deviation: each sigma_i alone contributes |G_i - t| sigma_i (covariance)
      // or |G_i (1 - b_i)| sigma_i (literal form).
      const Eigen::VectorXd gj = p.gamma.gamma.row(static_cast<Eigen::Index>(row.index)).transpose();
      const Eigen::VectorXd b = p.beta_by_bus(x);
      if (p.mode == VarianceMode::covariance)
        out.grad = scale * (gj.array() - gj.dot(b)).abs().matrix();
      else
        out.grad = scale * (gj.array() * (1.0 - b.array())).abs().matrix();
      out.one_sided = true;
    }
  }
  return out;
}

std::string dump_problem(const CcOpfProblem& p) {
  std::string out = fmt::format("# problem: {} / {} / {}\n", to_string(p.variant), to_string(p.mode),
                                p.chance_constrained ? "chance-constrained" : "deterministic");
  out += fmt::format("# quantiles: x_a = {:.10f} (eps {}), x_br = {:.10f} (eps {})\n", p.quantile_a.x,
                     p.quantile_a.epsilon, p.quantile_br.x, p.quantile_br.epsilon);
  std::vector<std::string> names;
  for (std::size_t g = 0; g < p.num_generators(); ++g) names.push_back(fmt::format("P{}", p.net.generators[g].bus));
  if (p.has_reserves()) {
    for (std::size_t g = 0; g < p.num_generators(); ++g) names.push_back(fmt::format("A{}", p.net.generators[g].bus));
    for (std::size_t g = 0; g < p.num_generators(); ++g) names.push_back(fmt::format("beta{}", p.net.generators[g].bus));
  }
  out += "minimize";
  for (std::size_t v = 0; v < names.size(); ++v)
    if (p.cost(static_cast<Eigen::Index>(v)) != 0.0)
      out += fmt::format(" {:+g} {}", p.cost(static_cast<Eigen::Index>(v)), names[v]);
  out += "\n";
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    std::string label = fmt::format("{}[{}]", to_string(row.kind), row.index);
    if (row.kind == ConstraintKind::flow_upper || row.kind == ConstraintKind::flow_lower) {
      const auto& br = p.net.branches[p.gamma.branches[row.index]];
      label += fmt::format(" ({}-{})", br.from_bus, br.to_bus);
    } else if (row.kind != ConstraintKind::balance && row.kind != ConstraintKind::beta_sum) {
      label += fmt::format(" (gen@{})", p.net.generators[row.index].bus);
    }
    out += fmt::format("{:4d} {:<32}", r, label);
    for (std::size_t v = 0; v < names.size(); ++v) {
      const double c = row.coeffs(static_cast<Eigen::Index>(v));
      if (c != 0.0) out += fmt::format(" {:+.6g} {}", c, names[v]);
    }
    if (row.std_sign != 0) out += fmt::format(" {:+.6g} * flow_std", row.std_sign * p.quantile_br.x);
    out += fmt::format(" {} {:.10g}", row.equality ? "==" : "<=", row.rhs);
    if (row.tightening_weights.size() > 0) out += fmt::format("   [tightening {:.6f}]", row.tightening);
    out += "\n";
  }
  return out;
}

}  // namespace ccopf
