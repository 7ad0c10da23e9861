#include <doctest.h>

#include <cmath>

#include "ccopf/errors.hpp"
#include "ccopf/settlement.hpp"
#include "support/cases.hpp"

using namespace ccopf;

namespace {

const PriceReport& prices() {
  static const auto r = price_report(builtin_case14(), {}, Variant::with_reserves, VarianceMode::covariance);
  return r;
}

const SettlementReport& uniform() {
  static const auto s = settle(builtin_case14(), prices().solution, prices(), ReservePriceRule::uniform_clearing);
  return s;
}

double amount(const ParticipantView& v, const std::string& item) {
  for (const auto& l : v.lines)
    if (l.item == item) return l.amount;
  FAIL("missing line item " << item);
  return 0.0;
}

}  // namespace

TEST_CASE("uniform clearing reconciliation") {
  const auto& s = uniform();
  CHECK(s.clearing_price == 14.0);
  CHECK(std::abs(s.reserve_payments - 210.0) <= 2.0);
  CHECK(std::abs(s.variability_charges - 255.0) <= 3.0);
  CHECK(std::abs(s.reconciliation_surplus - 45.0) <= 4.0);
  CHECK(s.reconciliation_surplus == doctest::Approx(s.variability_charges - s.reserve_payments));
}

TEST_CASE("congestion rent and the network identity") {
  const auto& s = uniform();
  CHECK(std::abs(s.congestion_rent - 8580.0) <= 85.8);
  CHECK(s.congestion_rent == doctest::Approx(s.load_payments - s.generator_revenues));

  double expected = 0.0;
  for (const auto& b : s.buses) expected += b.lmp * b.load_mw;
  for (const auto& g : s.generators) expected -= g.energy_revenue;
  CHECK(s.network_rent == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.network_rent >= 0.0);

  // Rent equals shadow price times flow on the congested branches.
  const auto& sol = prices().solution;
  const auto& pr = prices().problem;
  const auto net = builtin_case14();
  Eigen::VectorXd inj(14);
  for (std::size_t i = 0; i < 14; ++i) inj(static_cast<Eigen::Index>(i)) = -net.buses[i].load;
  for (std::size_t g = 0; g < 5; ++g)
    inj(static_cast<Eigen::Index>(net.bus_index(net.generators[g].bus))) += sol.p_g(static_cast<Eigen::Index>(g));
  const Eigen::VectorXd flows = pr.gamma.gamma * inj;
  const double by_flow = (sol.duals.flow_upper - sol.duals.flow_lower).dot(flows);
  CHECK(s.network_rent == doctest::Approx(by_flow).epsilon(1e-6));
}

TEST_CASE("variability charges follow the price vector") {
  const auto& s = uniform();
  const auto net = builtin_case14();
  double sum = 0.0;
  for (std::size_t i = 0; i < 14; ++i) sum += prices().lpv(static_cast<Eigen::Index>(i)) * net.buses[i].sigma;
  CHECK(std::abs(s.variability_charges - sum) <= 1e-6 * std::abs(sum));
  double col = 0.0;
  for (const auto& b : s.buses) col += b.variability_charge;
  CHECK(col == doctest::Approx(s.variability_charges).epsilon(1e-14));
  CHECK(s.buses[13].variability_charge / s.variability_charges == doctest::Approx(137.0 / 255.0).epsilon(0.03));
}

TEST_CASE("pro-rated charges cover reserve payments exactly") {
  const auto& s = uniform();
  double total = 0.0;
  for (const auto& b : s.buses) total += b.prorated_charge;
  CHECK(total == doctest::Approx(s.reserve_payments).epsilon(1e-12));
  CHECK(s.prorating_factor == doctest::Approx(s.reserve_payments / s.variability_charges));
}

TEST_CASE("pay as bid equals the optimizer's reserve cost") {
  const auto s = settle(builtin_case14(), prices().solution, prices(), ReservePriceRule::pay_as_bid);
  CHECK(std::abs(s.reserve_payments - prices().solution.objective_reserve) <= 1e-9);
  CHECK(std::abs(s.reserve_payments - 202.0) <= 202.0 * 0.02);
}

TEST_CASE("bus 14 participant view") {
  const auto v = participant_view(uniform(), 14);
  CHECK(std::abs(amount(v, "energy revenue") - 2039.0) <= 20.39);
  CHECK(std::abs(amount(v, "variability charge") - 137.0) <= 137.0 * 0.05);
}

TEST_CASE("bus 13 participant view") {
  const auto v = participant_view(uniform(), 13);
  CHECK(std::abs(amount(v, "load energy payment") - 2769.0) <= 27.69);
  CHECK(std::abs(amount(v, "variability charge") - 10.0) <= 1.0);
}

TEST_CASE("idle bus has all-zero line items") {
  auto net = builtin_case14();
  net.buses[6].load = 0.0;  // bus 7 has no generator
  net.buses[6].sigma = 0.0;
  const auto p = price_report(net, {}, Variant::with_reserves, VarianceMode::covariance);
  const auto s = settle(net, p.solution, p);
  const auto v = participant_view(s, 7);
  REQUIRE_FALSE(v.lines.empty());
  for (const auto& l : v.lines) CHECK(l.amount == 0.0);
}

TEST_CASE("settlement errors") {
  CHECK_THROWS_AS(participant_view(uniform(), 15), InputError);
  PriceReport truncated = prices();
  truncated.lmp.conservativeResize(3);
  CHECK_THROWS_AS(settle(builtin_case14(), prices().solution, truncated), InputError);
}
