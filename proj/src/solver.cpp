#include "ccopf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<std::size_t> nonlinear_rows(const CcOpfProblem& p) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < p.rows.size(); ++r)
    if (p.rows[r].std_sign != 0) out.push_back(r);
  return out;
}

// Linearization of the problem at `xk`, with elastic slacks on the nonlinear
// rows and beta confined to a box of half-width `radius` around xk.
LinearProgram linearize(const CcOpfProblem& p, const Eigen::VectorXd& xk, const std::vector<std::size_t>& nl,
                        double radius, double penalty) {
  const auto n = idx(p.num_vars());
  const auto ne = idx(nl.size());
  LinearProgram lp(n + ne);
  lp.cost.head(n) = p.cost;
  lp.cost.tail(ne).setConstant(penalty);
  lp.lower.tail(ne).setZero();
  if (p.has_reserves() && std::isfinite(radius)) {
    for (std::size_t g = 0; g < p.num_generators(); ++g) {
      const auto v = idx(p.beta_var(g));
      lp.lower(v) = xk(v) - radius;
      lp.upper(v) = xk(v) + radius;
    }
  }

  Eigen::Index k = 0;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    const std::string tag = fmt::format("{}[{}]", to_string(row.kind), row.index);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(n + ne);
    if (row.std_sign == 0) {
      coeffs.head(n) = row.coeffs;
      lp.add_row(coeffs, row.equality ? RowSense::equal : RowSense::less_equal, row.rhs, tag);
    } else {
      const Eigen::VectorXd grad = row_gradient(p, row, xk);
      coeffs.head(n) = grad;
      coeffs(n + k) = -1.0;
      ++k;
      lp.add_row(coeffs, RowSense::less_equal, grad.dot(xk) - row_residual(p, row, xk), tag);
    }
  }
  return lp;
}

struct Restored {
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = kInf;
};

// Best (P, A) for the shares in `xk`: with beta pinned the flow margins are
// constants, so this LP is exact.
Restored restore(const CcOpfProblem& p, const Eigen::VectorXd& xk, const std::vector<std::size_t>& nl,
                 double penalty) {
  const auto lp = linearize(p, xk, nl, 0.0, penalty);
  const auto res = solve_lp(lp);
  Restored out;
  if (res.status != LpStatus::optimal) return out;
  const auto n = idx(p.num_vars());
  if (res.x.tail(idx(nl.size())).maxCoeff() > 1e-9 * (1.0 + res.x.head(n).cwiseAbs().maxCoeff())) return out;
  out.feasible = true;
  out.x = res.x.head(n);
  for (std::size_t g = 0; g < p.num_generators(); ++g) out.x(idx(p.beta_var(g))) = xk(idx(p.beta_var(g)));
  out.objective = p.cost.dot(out.x);
  return out;
}

double max_beta_step(const CcOpfProblem& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double m = 0.0;
  for (std::size_t g = 0; g < p.num_generators(); ++g)
    m = std::max(m, std::abs(a(idx(p.beta_var(g))) - b(idx(p.beta_var(g)))));
  return m;
}

std::vector<std::size_t> clamped_branches(const CcOpfProblem& p, const Eigen::VectorXd& x) {
  std::vector<std::size_t> out;
  if (p.mode != VarianceMode::paper_literal || !p.has_reserves()) return out;
  const Eigen::VectorXd beta = p.beta_by_bus(x);
  for (Eigen::Index j = 0; j < p.gamma.gamma.rows(); ++j)
    if (flow_std_derivatives(p.gamma.gamma.row(j).transpose(), beta, p.sigma, p.mode).term.clamped)
      out.push_back(static_cast<std::size_t>(j));
  return out;
}

LinearProgram exact_lp(const CcOpfProblem& p) {
  LinearProgram lp(idx(p.num_vars()));
  lp.cost = p.cost;
  for (const auto& row : p.rows)
    lp.add_row(row.coeffs, row.equality ? RowSense::equal : RowSense::less_equal, row.rhs,
               fmt::format("{}[{}]", to_string(row.kind), row.index));
  return lp;
}

struct Multipliers {
  Eigen::VectorXd row_duals;
  double residual = 0.0;
};

// Least-L1 stationarity fit over the active set at x:
//   sum_b lambda_b grad g_b(x) + s+ - s- = -c,  lambda_b >= 0 on inequalities.
Multipliers recover_multipliers(const CcOpfProblem& p, const Eigen::VectorXd& x,
                                const std::vector<std::size_t>& active) {
  const auto n = idx(p.num_vars());
  const auto na = idx(active.size());
  LinearProgram lp(na + 2 * n);
  lp.cost.setZero();
  lp.cost.tail(2 * n).setOnes();
  lp.lower.tail(2 * n).setZero();

  Eigen::MatrixXd grads(n, na);
  for (Eigen::Index b = 0; b < na; ++b) {
    const auto& row = p.rows[active[static_cast<std::size_t>(b)]];
    grads.col(b) = row_gradient(p, row, x);
    if (!row.equality) lp.lower(b) = 0.0;
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(na + 2 * n);
    coeffs.head(na) = grads.row(v).transpose();
    coeffs(na + v) = 1.0;
    coeffs(na + n + v) = -1.0;
    lp.add_row(coeffs, RowSense::equal, -p.cost(v), fmt::format("stationarity[{}]", v));
  }

  const auto res = solve_lp(lp);
  if (res.status != LpStatus::optimal) throw SolveError("multiplier recovery failed: " + std::string(to_string(res.status)));
  Multipliers out;
  out.row_duals = Eigen::VectorXd::Zero(idx(p.rows.size()));
  for (Eigen::Index b = 0; b < na; ++b) out.row_duals(idx(active[static_cast<std::size_t>(b)])) = res.x(b);
  out.residual = res.objective;
  return out;
}

double max_violation(const CcOpfProblem& p, const Eigen::VectorXd& x) {
  double v = 0.0;
  for (const auto& row : p.rows) {
    const double g = row_residual(p, row, x);
    v = std::max(v, row.equality ? std::abs(g) : g);
  }
  return v;
}

// Newton steps on the KKT system of the active set:
//   [H  J^T] [dx    ]   [-c]
//   [J  0  ] [lambda] = [-g]
// H is the Hessian of sum lambda_r g_r, which only has a beta-beta block;
// it is differenced from row gradients. The trust-region loop leaves beta
// accurate to its step tolerance, while the flow margins curve strongly, so
// this recovers the remaining digits. Returns false if no step was kept.
bool polish(const CcOpfProblem& p, Eigen::VectorXd& x, const std::vector<std::size_t>& active,
            Eigen::VectorXd lambda, double tol) {
  const auto n = idx(p.num_vars());
  const auto na = idx(active.size());
  const auto ng = p.num_generators();
  auto lagrangian_grad = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& lam) {
    Eigen::VectorXd gr = p.cost;
    for (Eigen::Index b = 0; b < na; ++b)
      gr += lam(b) * row_gradient(p, p.rows[active[static_cast<std::size_t>(b)]], at);
    return gr;
  };
  auto kkt_residual = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& lam) {
    double r = lagrangian_grad(at, lam).cwiseAbs().maxCoeff();
    for (Eigen::Index b = 0; b < na; ++b)
      r = std::max(r, std::abs(row_residual(p, p.rows[active[static_cast<std::size_t>(b)]], at)));
    return r;
  };

  bool moved = false;
  double res = kkt_residual(x, lambda);
  for (int it = 0; it < 8 && res > 1e-10; ++it) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + na);
    constexpr double h = 1e-7;
    for (std::size_t g = 0; g < ng; ++g) {
      const auto v = idx(p.beta_var(g));
      Eigen::VectorXd up = x, dn = x;
      up(v) += h;
      dn(v) -= h;
      const Eigen::VectorXd col = (lagrangian_grad(up, lambda) - lagrangian_grad(dn, lambda)) / (2 * h);
      for (std::size_t k = 0; k < ng; ++k) kkt(idx(p.beta_var(k)), v) = col(idx(p.beta_var(k)));
    }
    for (Eigen::Index b = 0; b < na; ++b) {
      const auto& row = p.rows[active[static_cast<std::size_t>(b)]];
      const Eigen::VectorXd grad = row_gradient(p, row, x);
      kkt.block(0, n + b, n, 1) = grad;
      kkt.block(n + b, 0, 1, n) = grad.transpose();
      rhs(n + b) = -row_residual(p, row, x);
    }
    rhs.head(n) = -p.cost;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXd xn = x + sol.head(n);
    const Eigen::VectorXd ln = sol.tail(na);

    bool ok = max_violation(p, xn) <= tol && p.cost.dot(xn) <= p.cost.dot(x) + 1e-9 * (1.0 + std::abs(p.cost.dot(x)));
    for (Eigen::Index b = 0; ok && b < na; ++b)
      if (!p.rows[active[static_cast<std::size_t>(b)]].equality && ln(b) < -1e-9) ok = false;
    const double rn = ok ? kkt_residual(xn, ln) : res;
    if (!ok || rn >= res) break;
    x = xn;
    lambda = ln;
    res = rn;
    moved = true;
  }
  return moved;
}

void fill_solution(const CcOpfProblem& p, DispatchSolution& s, const SolverOptions& opts) {
  const auto ng = idx(p.num_generators());
  s.variant = p.variant;
  s.mode = p.mode;
  s.p_g = s.x.head(ng);
  s.a_cap = Eigen::VectorXd::Zero(ng);
  s.beta = Eigen::VectorXd::Zero(ng);
  if (p.has_reserves()) {
    // Round-off around a zero reserve would otherwise read as a negative capacity.
    for (Eigen::Index v = ng; v < 3 * ng; ++v)
      if (std::abs(s.x(v)) <= 1e-10) s.x(v) = 0.0;
    s.a_cap = s.x.segment(ng, ng);
    s.beta = s.x.segment(2 * ng, ng);
  }
  s.objective_energy = p.cost.head(ng).dot(s.p_g);
  s.objective_reserve = p.has_reserves() ? p.cost.segment(ng, ng).dot(s.a_cap) : 0.0;
  s.binding = binding_rows(p, s.x, opts.binding_tolerance);

  const auto nbr = p.gamma.gamma.rows();
  Duals& d = s.duals;
  d.gen_min = d.gen_max = d.beta_nonneg = d.reserve = Eigen::VectorXd::Zero(ng);
  d.flow_upper = d.flow_lower = Eigen::VectorXd::Zero(nbr);
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const double lam = s.row_duals(idx(r));
    const auto i = idx(p.rows[r].index);
    switch (p.rows[r].kind) {
      case ConstraintKind::balance: d.balance = lam; break;
      case ConstraintKind::gen_min: d.gen_min(i) = lam; break;
      case ConstraintKind::gen_max: d.gen_max(i) = lam; break;
      case ConstraintKind::beta_nonneg: d.beta_nonneg(i) = lam; break;
      case ConstraintKind::beta_sum: d.beta_sum = lam; break;
      case ConstraintKind::reserve_adequacy: d.reserve(i) = lam; break;
      case ConstraintKind::flow_upper: d.flow_upper(i) = lam; break;
      case ConstraintKind::flow_lower: d.flow_lower(i) = lam; break;
    }
  }

  s.flow_std.clear();
  const Eigen::VectorXd beta = p.beta_by_bus(s.x);
  for (Eigen::Index j = 0; j < nbr; ++j) {
    FlowStdTerm t;
    if (p.has_reserves()) {
      t = flow_std_derivatives(p.gamma.gamma.row(j).transpose(), beta, p.sigma, p.mode).term;
    } else {
      for (const auto& row : p.rows)
        if (row.kind == ConstraintKind::flow_upper && idx(row.index) == j && row.tightening_weights.size() != 0)
          t.value = std::sqrt(row.tightening_weights.cwiseProduct(p.sigma).squaredNorm());
      t.radicand = t.value * t.value;
    }
    t.branch = static_cast<std::size_t>(j);
    s.flow_std.push_back(t);
  }
}

DispatchSolution solve_linear(const CcOpfProblem& p, const SolverOptions& opts) {
  const auto res = solve_lp(exact_lp(p));
  if (res.status == LpStatus::infeasible) {
    std::string rows;
    for (auto r : res.infeasible_rows)
      rows += fmt::format(" {}[{}]", to_string(p.rows[r].kind), p.rows[r].index);
    throw SolveError("dispatch problem is infeasible; conflicting rows:" + rows);
  }
  if (res.status != LpStatus::optimal) throw SolveError(std::string("dispatch LP ended: ") + to_string(res.status));

  DispatchSolution s;
  s.x = res.x;
  s.row_duals = res.duals;
  s.iterations = 1;
  s.converged = true;
  s.degenerate = res.degenerate;
  s.trace.push_back({1, p.cost.dot(res.x), res.objective, 0.0, 0.0, true, clamped_branches(p, res.x)});
  fill_solution(p, s, opts);
  return s;
}

DispatchSolution solve_nonlinear(const CcOpfProblem& p, const SolverOptions& opts) {
  const auto nl = nonlinear_rows(p);
  const double penalty = 1e3 * (1.0 + p.cost.cwiseAbs().maxCoeff());
  const auto ng = p.num_generators();
  DispatchSolution s;

  // Starting shares proportional to capacity.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(idx(p.num_vars()));
  double pmax_total = 0.0;
  for (const auto& g : p.net.generators) pmax_total += g.p_max;
  for (std::size_t g = 0; g < ng; ++g) x(idx(p.beta_var(g))) = p.net.generators[g].p_max / pmax_total;

  Restored cur = restore(p, x, nl, penalty);
  int it = 0;
  for (int attempt = 0; !cur.feasible && attempt < 5; ++attempt) {
    ++it;
    const auto res = solve_lp(linearize(p, x, nl, 1.0, penalty));
    if (res.status != LpStatus::optimal) break;
    x = res.x.head(idx(p.num_vars()));
    cur = restore(p, x, nl, penalty);
    s.trace.push_back({it, cur.objective, res.objective, 0.0, 1.0, cur.feasible, clamped_branches(p, x)});
  }
  if (!cur.feasible) throw SolveError("dispatch problem is infeasible: no participation shares satisfy the flow margins");
  x = cur.x;
  double f = cur.objective;
  ++it;
  s.trace.push_back({it, f, f, 0.0, 0.0, true, clamped_branches(p, x)});

  double radius = opts.initial_radius;
  bool converged = false;
  while (it < opts.max_iterations) {
    ++it;
    const auto res = solve_lp(linearize(p, x, nl, radius, penalty));
    if (res.status != LpStatus::optimal)
      throw SolveError(std::string("linearized subproblem ended: ") + to_string(res.status));
    const double pred = f - res.objective;
    if (pred <= 1e-12 * (1.0 + std::abs(f))) {
      s.trace.push_back({it, f, res.objective, 0.0, radius, false, clamped_branches(p, x)});
      converged = true;
      break;
    }
    const Eigen::VectorXd trial = res.x.head(idx(p.num_vars()));
    const double step = max_beta_step(p, trial, x);
    const Restored next = restore(p, trial, nl, penalty);
    const bool accept = next.feasible && f - next.objective >= 1e-4 * pred;
    if (accept) {
      const double df = std::abs(f - next.objective);
      x = next.x;
      f = next.objective;
      s.trace.push_back({it, f, res.objective, step, radius, true, clamped_branches(p, x)});
      if (step <= opts.beta_tolerance && df <= opts.objective_tolerance * (1.0 + std::abs(f))) {
        converged = true;
        break;
      }
    } else {
      s.trace.push_back({it, f, res.objective, step, radius, false, clamped_branches(p, x)});
      radius *= 0.5;
      // Any step the box still allows is below the resolution of the stopping test.
      if (radius < 1e-3 * opts.beta_tolerance) {
        converged = true;
        break;
      }
    }
  }

  s.iterations = it;
  s.converged = converged;
  const auto active = binding_rows(p, x, opts.binding_tolerance);
  auto m = recover_multipliers(p, x, active);
  {
    Eigen::VectorXd lam(idx(active.size()));
    for (std::size_t b = 0; b < active.size(); ++b) lam(idx(b)) = m.row_duals(idx(active[b]));
    Eigen::VectorXd xp = x;
    if (polish(p, xp, active, lam, 1e-9 * (1.0 + p.cost.cwiseAbs().maxCoeff()))) {
      const double fp = p.cost.dot(xp);
      s.trace.push_back({it, fp, fp, max_beta_step(p, xp, x), 0.0, true, clamped_branches(p, xp)});
      x = xp;
      m = recover_multipliers(p, x, binding_rows(p, x, opts.binding_tolerance));
    }
  }
  s.x = x;
  s.row_duals = m.row_duals;
  s.multiplier_residual = m.residual;
  fill_solution(p, s, opts);
  // A binding inequality carrying no multiplier: the active set is not unique.
  for (auto r : s.binding)
    if (!p.rows[r].equality && std::abs(s.row_duals(idx(r))) <= 1e-9) s.degenerate = true;
  return s;
}

}  // namespace

std::vector<std::size_t> binding_rows(const CcOpfProblem& p, const Eigen::VectorXd& x, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    if (row.equality || row_residual(p, row, x) >= -tol * (1.0 + std::abs(row.rhs))) out.push_back(r);
  }
  return out;
}

DispatchSolution solve_ccopf(const CcOpfProblem& problem, const SolverOptions& opts) {
  // With every sigma zero the flow deviations vanish identically.
  if (!problem.is_nonlinear() || problem.sigma.cwiseAbs().maxCoeff() == 0.0) return solve_linear(problem, opts);
  return solve_nonlinear(problem, opts);
}

double KktReport::max_residual() const {
  return std::max({stationarity, complementarity, primal_infeasibility, dual_sign});
}

KktReport verify_kkt(const CcOpfProblem& p, const DispatchSolution& s) {
  KktReport k;
  Eigen::VectorXd grad = p.cost;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    const double lam = s.row_duals(idx(r));
    const double g = row_residual(p, row, s.x);
    if (lam != 0.0) grad += lam * row_gradient(p, row, s.x);
    if (row.equality) {
      k.primal_infeasibility = std::max(k.primal_infeasibility, std::abs(g));
    } else {
      k.primal_infeasibility = std::max(k.primal_infeasibility, g);
      k.dual_sign = std::max(k.dual_sign, -lam);
      k.complementarity = std::max(k.complementarity, std::abs(lam * g));
    }
  }
  k.stationarity = grad.cwiseAbs().maxCoeff();
  return k;
}

std::string format_trace(const DispatchSolution& s) {
  std::string out = fmt::format("{:>4}  {:>16}  {:>16}  {:>12}  {:>10}  {}\n", "iter", "objective", "model",
                                "max dbeta", "radius", "step");
  for (const auto& r : s.trace) {
    out += fmt::format("{:>4}  {:>16.6f}  {:>16.6f}  {:>12.3e}  {:>10.3e}  {}", r.iteration, r.objective,
                       r.model_objective, r.max_beta_step, r.radius, r.accepted ? "accepted" : "rejected");
    if (!r.clamped_branches.empty()) {
      out += "  clamped:";
      for (auto b : r.clamped_branches) out += fmt::format(" {}", b);
    }
    out += "\n";
  }
  out += fmt::format("{} after {} iterations\n", s.converged ? "converged" : "not converged", s.iterations);
  return out;
}

}  // namespace ccopf
