#include "ccopf/settlement.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {

constexpr double kAccepted = 1e-6;  // MW

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

const char* to_string(ReservePriceRule r) {
  return r == ReservePriceRule::uniform_clearing ? "uniform-clearing" : "pay-as-bid";
}

SettlementReport settle(const NetworkCase& net, const DispatchSolution& s, const PriceReport& prices,
                        ReservePriceRule rule) {
  const auto nb = net.buses.size();
  if (static_cast<std::size_t>(prices.lmp.size()) != nb || static_cast<std::size_t>(prices.lpv.size()) != nb)
    throw InputError("prices missing for some buses");
  if (static_cast<std::size_t>(s.p_g.size()) != net.generators.size())
    throw InputError("solution does not match the case's generators");

  SettlementReport rep;
  rep.rule = rule;
  for (std::size_t g = 0; g < net.generators.size(); ++g)
    if (s.a_cap(idx(g)) > kAccepted) rep.clearing_price = std::max(rep.clearing_price, net.generators[g].cost_reserve);

  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = net.buses[i];
    BusSettlement bs;
    bs.bus = b.id;
    bs.load_mw = b.load;
    bs.sigma_mw = b.sigma;
    bs.lmp = prices.lmp(idx(i));
    bs.lpv = prices.lpv(idx(i));
    bs.load_payment = bs.lmp * b.load;
    bs.variability_charge = bs.lpv * b.sigma;
    if (b.load > 0.0)
      rep.load_payments += bs.load_payment;
    else
      rep.nondispatchable_revenues -= bs.load_payment;
    rep.network_rent += bs.load_payment;
    rep.variability_charges += bs.variability_charge;
    rep.buses.push_back(bs);
  }

  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    GeneratorSettlement gs;
    gs.index = g;
    gs.bus = gen.bus;
    gs.p_mw = s.p_g(idx(g));
    gs.a_mw = s.a_cap(idx(g));
    gs.energy_revenue = prices.lmp(idx(net.bus_index(gen.bus))) * gs.p_mw;
    const double price = rule == ReservePriceRule::uniform_clearing ? rep.clearing_price : gen.cost_reserve;
    gs.reserve_payment = gs.a_mw > kAccepted ? price * gs.a_mw : 0.0;
    rep.generator_revenues += gs.energy_revenue;
    rep.reserve_payments += gs.reserve_payment;
    rep.generators.push_back(gs);
  }

  rep.congestion_rent = rep.load_payments - rep.generator_revenues;
  rep.network_rent -= rep.generator_revenues;
  rep.reconciliation_surplus = rep.variability_charges - rep.reserve_payments;
  rep.prorating_factor = rep.variability_charges != 0.0 ? rep.reserve_payments / rep.variability_charges : 0.0;
  for (auto& bs : rep.buses) bs.prorated_charge = bs.variability_charge * rep.prorating_factor;
  return rep;
}

ParticipantView participant_view(const SettlementReport& rep, int bus) {
  const auto it = std::find_if(rep.buses.begin(), rep.buses.end(), [&](const auto& b) { return b.bus == bus; });
  if (it == rep.buses.end()) throw InputError(fmt::format("unknown bus {}", bus));

  ParticipantView v;
  v.bus = bus;
  if (it->load_mw < 0.0)
    v.lines.push_back({"energy revenue", -it->load_payment});
  else
    v.lines.push_back({"load energy payment", it->load_payment});
  v.lines.push_back({"variability charge", it->variability_charge});
  v.lines.push_back({"pro-rated variability charge", it->prorated_charge});
  for (const auto& g : rep.generators) {
    if (g.bus != bus) continue;
    v.lines.push_back({fmt::format("generator {} energy revenue", g.index + 1), g.energy_revenue});
    v.lines.push_back({fmt::format("generator {} reserve payment", g.index + 1), g.reserve_payment});
  }
  return v;
}

}  // namespace ccopf
