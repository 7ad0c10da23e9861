#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccopf/formulation.hpp"
#include "support/cases.hpp"
#include "support/monte_carlo.hpp"

using namespace ccopf;

namespace {

// Sigma column of the 14-bus case, typed in independently of builtin_case14().
const std::vector<double> kSigma = {0.68, 0.24, 0.18, 1.70, 1.20, 0.44, 2.06, 0.60, 1.22, 1.48, 0.30, 1.14, 1.32, 5.00};

Eigen::VectorXd uniform_beta_by_bus(const NetworkCase& net) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.buses.size()));
  for (const auto& g : net.generators)
    b(static_cast<Eigen::Index>(net.bus_index(g.bus))) += 1.0 / static_cast<double>(net.generators.size());
  return b;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("reserve requirement arithmetic") {
  double sumsq = 0.0;
  for (double s : kSigma) sumsq += s * s;
  CHECK(std::sqrt(sumsq) == doctest::Approx(6.441).epsilon(1e-4));

  CHECK(reserve_requirement(0.0, kSigma, 2.326348) == 0.0);
  CHECK(reserve_requirement(0.734, kSigma, 2.326348) == doctest::Approx(10.998).epsilon(1e-4));
  const std::vector<double> single = {3.0};
  CHECK(reserve_requirement(1.0, single, x_epsilon(0.01).x) == doctest::Approx(6.979).epsilon(1e-4));
}

TEST_CASE("flow deviation vanishes without variability") {
  const std::vector<double> g = {0.3, -0.2, 0.1}, b = {0.5, 0.5, 0.0}, s = {0.0, 0.0, 0.0};
  CHECK(flow_std(g, b, s, VarianceMode::covariance).value == 0.0);
  CHECK(flow_std(g, b, s, VarianceMode::paper_literal).value == 0.0);
}

TEST_CASE("one uncertain bus, one responding generator") {
  const std::vector<double> g = {0.0, 0.4, -0.3, 0.25};
  const std::vector<double> beta = {0.0, 0.0, 1.0, 0.0};  // all recourse at bus position 2
  const std::vector<double> s = {0.0, 0.0, 0.0, 2.5};     // only bus position 3 fluctuates
  CHECK(flow_std(g, beta, s, VarianceMode::covariance).value == doctest::Approx(std::abs(0.25 - -0.3) * 2.5));
}

TEST_CASE("covariance flow deviation matches sampling on the 14-bus case") {
  const auto net = builtin_case14();
  const auto sf = shift_factors(net, ReferenceBus{1});
  const Eigen::VectorXd beta_bus = uniform_beta_by_bus(net);
  const auto term = flow_std(as_std(sf.gamma.row(0).transpose()), as_std(beta_bus), kSigma, VarianceMode::covariance);

  const Eigen::VectorXd beta_gen = Eigen::VectorXd::Constant(5, 0.2);
  const double sampled = testing::sample_flow_std(net, sf.branches[0], beta_gen, 1'000'000, 2024);
  CHECK(std::abs(term.value - sampled) / sampled <= 0.005);
}

TEST_CASE("covariance flow deviation is slack invariant and bounded") {
  const auto net = builtin_case14();
  const auto ref = shift_factors(net, ReferenceBus{1}, BranchSet::all);
  const auto dist = shift_factors(net, Distributed{pmax_slack_weights(net)}, BranchSet::all);
  const Eigen::VectorXd sigma = Eigen::Map<const Eigen::VectorXd>(kSigma.data(), 14);
  const Eigen::VectorXd beta = uniform_beta_by_bus(net);
  for (Eigen::Index j = 0; j < ref.gamma.rows(); ++j) {
    const Eigen::VectorXd gr = ref.gamma.row(j).transpose(), gd = dist.gamma.row(j).transpose();
    const double a = flow_std(as_std(gr), as_std(beta), kSigma, VarianceMode::covariance).value;
    const double b = flow_std(as_std(gd), as_std(beta), kSigma, VarianceMode::covariance).value;
    CHECK(std::abs(a - b) <= 1e-9);
    const double bound = gr.cwiseProduct(sigma).norm() + gr.cwiseAbs().maxCoeff() * sigma.norm();
    CHECK(a <= bound + 1e-12);
  }
}

TEST_CASE("flow deviation derivatives match central differences") {
  const auto net = builtin_case14();
  const auto sf = shift_factors(net, ReferenceBus{1}, BranchSet::all);
  const Eigen::VectorXd sigma = Eigen::Map<const Eigen::VectorXd>(kSigma.data(), 14);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(14);
  beta(1) = 0.1;
  beta(5) = 0.3;
  beta(7) = 0.6;
  const double h = 1e-6;
  for (auto mode : {VarianceMode::covariance, VarianceMode::paper_literal}) {
    for (Eigen::Index j : {0, 6, 12}) {
      const Eigen::VectorXd g = sf.gamma.row(j).transpose();
      const auto d = flow_std_derivatives(g, beta, sigma, mode);
      if (d.term.clamped || d.term.value == 0.0) continue;
      for (Eigen::Index i = 0; i < 14; ++i) {
        Eigen::VectorXd bp = beta, bm = beta, sp = sigma, sm = sigma;
        bp(i) += h;
        bm(i) -= h;
        sp(i) += h;
        sm(i) -= h;
        const double fd_b =
            (flow_std_derivatives(g, bp, sigma, mode).term.value - flow_std_derivatives(g, bm, sigma, mode).term.value) /
            (2 * h);
        const double fd_s =
            (flow_std_derivatives(g, beta, sp, mode).term.value - flow_std_derivatives(g, beta, sm, mode).term.value) /
            (2 * h);
        CHECK(d.d_beta(i) == doctest::Approx(fd_b).epsilon(1e-5).scale(1.0));
        CHECK(d.d_sigma(i) == doctest::Approx(fd_s).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("paper-literal radicand can go negative and is clamped") {
  // Concentrated recourse with heavy variability elsewhere drives the literal
  // radicand below zero.
  const std::vector<double> g = {0.0, 0.6, 0.3};
  const std::vector<double> beta = {0.0, 1.0, 0.0};
  const std::vector<double> s = {0.0, 0.1, 5.0};
  const auto t = flow_std(g, beta, s, VarianceMode::paper_literal);
  CHECK(t.radicand < 0.0);
  CHECK(t.clamped);
  CHECK(t.value == 0.0);
}

TEST_CASE("with-reserves assembly layout") {
  const auto p = assemble(builtin_case14(), Variant::with_reserves, {});
  const std::size_t ng = 5;
  CHECK(p.num_vars() == 3 * ng);
  // balance, 2 generator limits, beta >= 0, beta sum, reserve, and two flow rows
  CHECK(p.rows.size() == 1 + ng + ng + ng + 1 + ng + 2);
  CHECK(p.rows.front().equality);
  CHECK(p.is_nonlinear());
  CHECK(p.quantile_a.x == doctest::Approx(2.326348).epsilon(1e-6));
}

TEST_CASE("without-reserves tightenings scale linearly with sigma") {
  const auto net = builtin_case14();
  const auto a = assemble(net, Variant::without_reserves, {});
  auto doubled = net;
  for (auto& b : doubled.buses) b.sigma *= 2.0;
  const auto b = assemble(doubled, Variant::without_reserves, {});
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK_FALSE(a.is_nonlinear());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(b.rows[r].tightening == doctest::Approx(2.0 * a.rows[r].tightening).epsilon(1e-14));
    CHECK(a.rows[r].tightening >= 0.0);
  }
}

TEST_CASE("zero sigma or deterministic assembly removes every margin") {
  const auto net = builtin_case14();
  for (auto v : {Variant::with_reserves, Variant::without_reserves}) {
    const auto zero = assemble(testing::with_sigma(net, 0.0), v, {});
    for (const auto& r : zero.rows) CHECK(r.tightening == 0.0);
    AssemblyOptions det;
    det.chance_constrained = false;
    const auto d = assemble(net, v, {}, det);
    CHECK(d.quantile_a.x == 0.0);
    CHECK(d.quantile_br.x == 0.0);
    for (const auto& r : d.rows) CHECK(r.tightening == 0.0);
  }
}

TEST_CASE("no ratings, no flow rows") {
  const auto p = assemble(testing::without_ratings(builtin_case14()), Variant::with_reserves, {});
  for (const auto& r : p.rows)
    CHECK((r.kind != ConstraintKind::flow_upper && r.kind != ConstraintKind::flow_lower));
}

TEST_CASE("row gradients match central differences") {
  const auto p = assemble(builtin_case14(), Variant::with_reserves, {});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(15);
  x.head(5) << 300, 100, 50, 80, 48;
  x.segment(5, 5) << 1, 2, 3, 4, 5;
  x.tail(5) << 0.1, 0.2, 0.1, 0.3, 0.3;
  const double h = 1e-6;
  for (const auto& row : p.rows) {
    const auto g = row_gradient(p, row, x);
    for (Eigen::Index v = 0; v < 15; ++v) {
      Eigen::VectorXd xp = x, xm = x;
      xp(v) += h;
      xm(v) -= h;
      const double fd = (row_residual(p, row, xp) - row_residual(p, row, xm)) / (2 * h);
      CHECK(g(v) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("sigma gradients match central differences") {
  const auto net = builtin_case14();
  for (auto v : {Variant::with_reserves, Variant::without_reserves}) {
    const auto p = assemble(net, v, {});
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars()));
    if (p.has_reserves()) x.tail(5) << 0.1, 0.2, 0.1, 0.3, 0.3;
    const double h = 1e-6;
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
      const auto sg = row_sigma_gradient(p, p.rows[r], x);
      for (std::size_t i = 0; i < net.buses.size(); ++i) {
        auto up = net, dn = net;
        up.buses[i].sigma += h;
        dn.buses[i].sigma -= h;
        const auto pu = assemble(up, v, {}), pd = assemble(dn, v, {});
        const double fd = (row_residual(pu, pu.rows[r], x) - row_residual(pd, pd.rows[r], x)) / (2 * h);
        CHECK(sg.grad(static_cast<Eigen::Index>(i)) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("problem dump lists every row") {
  const auto p = assemble(builtin_case14(), Variant::with_reserves, {});
  const auto text = dump_problem(p);
  CHECK(text.find("flow_upper") != std::string::npos);
  CHECK(text.find("reserve_adequacy") != std::string::npos);
}
