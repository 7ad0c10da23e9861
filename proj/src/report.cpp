#include "ccopf/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "ccopf/errors.hpp"

namespace ccopf {

using json = nlohmann::ordered_json;

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::string fixed(double v, int digits) {
  std::string s = fmt::format("{:.{}f}", v, digits);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string full(double v) { return fmt::format("{}", v); }

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json metadata(const PriceReport& rep) {
  const auto& s = rep.solution;
  return json{{"variant", to_string(rep.variant)},
              {"variance_mode", to_string(rep.mode)},
              {"pricing_form", to_string(rep.form)},
              {"epsilon_a", rep.epsilon_a},
              {"epsilon_br", rep.epsilon_br},
              {"converged", s.converged},
              {"iterations", s.iterations},
              {"degenerate", s.degenerate},
              {"multiplier_residual", s.multiplier_residual}};
}

std::string header(const PriceReport& rep) {
  return fmt::format("{} / {} / eps_a={} eps_br={}", to_string(rep.variant), to_string(rep.mode), rep.epsilon_a,
                     rep.epsilon_br);
}

std::string status_line(const DispatchSolution& s) {
  return fmt::format("{} after {} iteration{}{}\n", s.converged ? "converged" : "NOT CONVERGED", s.iterations,
                     s.iterations == 1 ? "" : "s", s.degenerate ? " (degenerate basis)" : "");
}

}  // namespace

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::table: return "table";
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
  }
  return "?";
}

OutputFormat parse_output_format(const std::string& s) {
  if (s == "table") return OutputFormat::table;
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw InputError("unknown output format '" + s + "'");
}

std::string fixed2(double v) { return fixed(v, 2); }

std::string render_dispatch(const PriceReport& rep, OutputFormat f) {
  const auto& s = rep.solution;
  const auto& net = rep.problem.net;
  const bool reserves = rep.problem.has_reserves();
  const auto ng = net.generators.size();

  if (f == OutputFormat::json) {
    json gens = json::array();
    for (std::size_t g = 0; g < ng; ++g) {
      json e{{"bus", net.generators[g].bus}, {"p_mw", s.p_g(idx(g))}};
      if (reserves) {
        e["a_mw"] = s.a_cap(idx(g));
        e["beta"] = s.beta(idx(g));
      }
      gens.push_back(e);
    }
    json doc{{"metadata", metadata(rep)},
             {"generators", gens},
             {"cost", {{"energy", s.objective_energy}, {"reserve", s.objective_reserve}, {"total", s.total_cost()}}}};
    return doc.dump(2) + "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = reserves ? "bus,p_mw,a_mw,beta\n" : "bus,p_mw\n";
    for (std::size_t g = 0; g < ng; ++g) {
      out += fmt::format("{},{}", net.generators[g].bus, full(s.p_g(idx(g))));
      if (reserves) out += fmt::format(",{},{}", full(s.a_cap(idx(g))), full(s.beta(idx(g))));
      out += "\n";
    }
    out += fmt::format("cost_energy,{}\ncost_reserve,{}\ncost_total,{}\n", full(s.objective_energy),
                       full(s.objective_reserve), full(s.total_cost()));
    return out;
  }

  std::string out = fmt::format("Economic dispatch ({})\n", header(rep));
  out += reserves ? fmt::format("{:>5}  {:>10}  {:>10}  {:>8}\n", "Bus", "P_g (MW)", "A (MW)", "beta")
                  : fmt::format("{:>5}  {:>10}\n", "Bus", "P_g (MW)");
  for (std::size_t g = 0; g < ng; ++g) {
    out += fmt::format("{:>5}  {:>10}", net.generators[g].bus, fixed2(s.p_g(idx(g))));
    if (reserves) out += fmt::format("  {:>10}  {:>8}", fixed2(s.a_cap(idx(g))), fixed(s.beta(idx(g)), 3));
    out += "\n";
  }
  out += fmt::format("Energy cost ($/hr)   {:>12}\n", fixed2(s.objective_energy));
  if (reserves) out += fmt::format("Reserve cost ($/hr)  {:>12}\n", fixed2(s.objective_reserve));
  out += fmt::format("Total cost ($/hr)    {:>12}\n", fixed2(s.total_cost()));
  out += status_line(s);
  return out;
}

std::string render_prices(const PriceReport& rep, OutputFormat f) {
  const auto nb = rep.bus_ids.size();
  if (f == OutputFormat::json) {
    json buses = json::array();
    for (std::size_t i = 0; i < nb; ++i)
      buses.push_back({{"bus", rep.bus_ids[i]},
                       {"lmp", rep.lmp(idx(i))},
                       {"lpv", rep.lpv(idx(i))},
                       {"lpv_one_sided", static_cast<bool>(rep.lpv_one_sided[i])}});
    json doc{{"metadata", metadata(rep)}, {"buses", buses}, {"binding", rep.binding}};
    return doc.dump(2) + "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = "bus,lmp,lpv,lpv_one_sided\n";
    for (std::size_t i = 0; i < nb; ++i)
      out += fmt::format("{},{},{},{}\n", rep.bus_ids[i], full(rep.lmp(idx(i))), full(rep.lpv(idx(i))),
                         rep.lpv_one_sided[i] ? 1 : 0);
    return out;
  }

  std::string out = fmt::format("Locational prices ({}, {} pricing)\n", header(rep), to_string(rep.form));
  out += fmt::format("{:>5}  {:>12}  {:>12}\n", "Bus", "LMP ($/MWh)", "LPV ($/MWh)");
  bool any_flag = false;
  for (std::size_t i = 0; i < nb; ++i) {
    const bool flag = rep.lpv_one_sided[i];
    any_flag = any_flag || flag;
    out += fmt::format("{:>5}  {:>12}  {:>12}{}\n", rep.bus_ids[i], fixed2(rep.lmp(idx(i))), fixed2(rep.lpv(idx(i))),
                       flag ? " *" : "");
  }
  if (any_flag) out += "* one-sided derivative (sigma at a square-root kink)\n";
  out += "Binding:";
  for (const auto& b : rep.binding) out += " " + b;
  out += "\n";
  out += status_line(rep.solution);
  return out;
}

std::string render_settlement(const SettlementReport& rep, OutputFormat f) {
  if (f == OutputFormat::json) {
    json gens = json::array();
    for (const auto& g : rep.generators)
      gens.push_back({{"generator", g.index + 1},
                      {"bus", g.bus},
                      {"p_mw", g.p_mw},
                      {"a_mw", g.a_mw},
                      {"energy_revenue", g.energy_revenue},
                      {"reserve_payment", g.reserve_payment}});
    json buses = json::array();
    for (const auto& b : rep.buses)
      buses.push_back({{"bus", b.bus},
                       {"load_mw", b.load_mw},
                       {"sigma_mw", b.sigma_mw},
                       {"lmp", b.lmp},
                       {"lpv", b.lpv},
                       {"load_payment", b.load_payment},
                       {"variability_charge", b.variability_charge},
                       {"prorated_charge", b.prorated_charge}});
    json totals{{"load_payments", rep.load_payments},
                {"generator_revenues", rep.generator_revenues},
                {"nondispatchable_revenues", rep.nondispatchable_revenues},
                {"congestion_rent", rep.congestion_rent},
                {"network_rent", rep.network_rent},
                {"variability_charges", rep.variability_charges},
                {"reserve_payments", rep.reserve_payments},
                {"reconciliation_surplus", rep.reconciliation_surplus},
                {"prorating_factor", rep.prorating_factor}};
    json doc{{"metadata", {{"reserve_rule", to_string(rep.rule)}, {"clearing_price", rep.clearing_price}}},
             {"generators", gens},
             {"buses", buses},
             {"totals", totals}};
    return doc.dump(2) + "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = "generator,bus,p_mw,a_mw,energy_revenue,reserve_payment\n";
    for (const auto& g : rep.generators)
      out += fmt::format("{},{},{},{},{},{}\n", g.index + 1, g.bus, full(g.p_mw), full(g.a_mw), full(g.energy_revenue),
                         full(g.reserve_payment));
    out += "\nbus,load_mw,sigma_mw,lmp,lpv,load_payment,variability_charge,prorated_charge\n";
    for (const auto& b : rep.buses)
      out += fmt::format("{},{},{},{},{},{},{},{}\n", b.bus, full(b.load_mw), full(b.sigma_mw), full(b.lmp),
                         full(b.lpv), full(b.load_payment), full(b.variability_charge), full(b.prorated_charge));
    out += "\ntotal,value\n";
    out += fmt::format("load_payments,{}\ngenerator_revenues,{}\nnondispatchable_revenues,{}\ncongestion_rent,{}\n",
                       full(rep.load_payments), full(rep.generator_revenues), full(rep.nondispatchable_revenues),
                       full(rep.congestion_rent));
    out += fmt::format("network_rent,{}\nvariability_charges,{}\nreserve_payments,{}\nreconciliation_surplus,{}\n",
                       full(rep.network_rent), full(rep.variability_charges), full(rep.reserve_payments),
                       full(rep.reconciliation_surplus));
    out += fmt::format("prorating_factor,{}\nclearing_price,{}\n", full(rep.prorating_factor), full(rep.clearing_price));
    return out;
  }

  std::string out = fmt::format("Settlement (reserves {}, clearing price {} $/MWh)\n", to_string(rep.rule),
                                fixed2(rep.clearing_price));
  out += fmt::format("{:>4}  {:>5}  {:>10}  {:>8}  {:>16}  {:>16}\n", "Gen", "Bus", "P_g (MW)", "A (MW)",
                     "Energy ($/hr)", "Reserve ($/hr)");
  for (const auto& g : rep.generators)
    out += fmt::format("{:>4}  {:>5}  {:>10}  {:>8}  {:>16}  {:>16}\n", g.index + 1, g.bus, fixed2(g.p_mw),
                       fixed2(g.a_mw), fixed2(g.energy_revenue), fixed2(g.reserve_payment));
  out += fmt::format("\n{:>5}  {:>9}  {:>9}  {:>9}  {:>9}  {:>14}  {:>14}  {:>12}\n", "Bus", "Load", "Sigma", "LMP",
                     "LPV", "Energy ($/hr)", "Variab. ($/hr)", "Pro-rated");
  for (const auto& b : rep.buses)
    out += fmt::format("{:>5}  {:>9}  {:>9}  {:>9}  {:>9}  {:>14}  {:>14}  {:>12}\n", b.bus, fixed2(b.load_mw),
                       fixed2(b.sigma_mw), fixed2(b.lmp), fixed2(b.lpv), fixed2(b.load_payment),
                       fixed2(b.variability_charge), fixed2(b.prorated_charge));
  out += "\n";
  auto line = [&](const char* label, double v) { out += fmt::format("{:<34} {:>12}\n", label, fixed2(v)); };
  line("Load payments ($/hr)", rep.load_payments);
  line("Generator energy revenues ($/hr)", rep.generator_revenues);
  line("Non-dispatchable revenues ($/hr)", rep.nondispatchable_revenues);
  line("Congestion rent ($/hr)", rep.congestion_rent);
  line("Network rent, all injections ($/hr)", rep.network_rent);
  line("Variability charges ($/hr)", rep.variability_charges);
  line("Reserve payments ($/hr)", rep.reserve_payments);
  line("Reconciliation surplus ($/hr)", rep.reconciliation_surplus);
  out += fmt::format("{:<34} {:>12}\n", "Pro-rating factor", fixed(rep.prorating_factor, 4));
  return out;
}

std::string render_participant(const ParticipantView& v, OutputFormat f) {
  if (f == OutputFormat::json) {
    json lines = json::array();
    for (const auto& l : v.lines) lines.push_back({{"item", l.item}, {"amount", l.amount}});
    return json{{"bus", v.bus}, {"lines", lines}}.dump(2) + "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = "bus,item,amount\n";
    for (const auto& l : v.lines) out += fmt::format("{},{},{}\n", v.bus, l.item, full(l.amount));
    return out;
  }
  std::string out = fmt::format("Bus {}\n", v.bus);
  for (const auto& l : v.lines) out += fmt::format("  {:<34} {:>12} $/hr\n", l.item, fixed2(l.amount));
  return out;
}

std::string render_oracle(const std::vector<OracleRow>& rows, double delta, OutputFormat f) {
  double worst = 0.0;
  int flagged = 0;
  for (const auto& r : rows) {
    if (r.flagged())
      ++flagged;
    else
      worst = std::max(worst, r.rel_error);
  }
  if (f == OutputFormat::json) {
    json a = json::array();
    for (const auto& r : rows)
      a.push_back({{"bus", r.bus},
                   {"analytic", r.analytic},
                   {"empirical", r.empirical},
                   {"rel_error", r.rel_error},
                   {"kink", r.kink},
                   {"basis_change", r.basis_change}});
    return json{{"delta", delta}, {"max_rel_error_unflagged", worst}, {"flagged", flagged}, {"buses", a}}.dump(2) +
           "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = "bus,analytic,empirical,rel_error,kink,basis_change\n";
    for (const auto& r : rows)
      out += fmt::format("{},{},{},{},{},{}\n", r.bus, full(r.analytic), full(r.empirical), full(r.rel_error),
                         r.kink ? 1 : 0, r.basis_change ? 1 : 0);
    return out;
  }
  std::string out = fmt::format("LPV oracle (central differences, delta = {} MW)\n", delta);
  out += fmt::format("{:>5}  {:>12}  {:>12}  {:>10}  {}\n", "Bus", "Analytic", "Empirical", "Rel. err", "Flags");
  for (const auto& r : rows) {
    std::string flags;
    if (r.kink) flags += "kink ";
    if (r.basis_change) flags += "basis-change";
    out += fmt::format("{:>5}  {:>12}  {:>12}  {:>10.2e}  {}\n", r.bus, fixed(r.analytic, 4), fixed(r.empirical, 4),
                       r.rel_error, flags);
  }
  out += fmt::format("max rel. error (unflagged) {:.2e}; flagged buses {}\n", worst, flagged);
  return out;
}

std::string render_comparison(const ModeComparison& c, OutputFormat f) {
  const auto nb = c.bus_ids.size();
  if (f == OutputFormat::json) {
    json cols = json::array();
    for (std::size_t k = 0; k < c.columns.size(); ++k)
      cols.push_back({{"name", c.columns[k]}, {"total_cost", c.total_cost[k]}, {"lpv", to_json(c.lpv[k])}});
    return json{{"bus_ids", c.bus_ids},
                {"columns", cols},
                {"max_abs_delta", to_json(c.max_abs_delta)},
                {"max_rel_delta", c.max_rel_delta},
                {"clamped_branches", c.clamped_labels},
                {"clamp_events", c.clamp_events}}
               .dump(2) +
           "\n";
  }
  if (f == OutputFormat::csv) {
    std::string out = "bus";
    for (const auto& col : c.columns) out += "," + col;
    out += ",max_abs_delta\n";
    for (std::size_t i = 0; i < nb; ++i) {
      out += fmt::format("{}", c.bus_ids[i]);
      for (const auto& v : c.lpv) out += "," + full(v(idx(i)));
      out += "," + full(c.max_abs_delta(idx(i))) + "\n";
    }
    return out;
  }
  std::string out = "LPV by variance mode and pricing form ($/MWh)\n";
  out += fmt::format("{:>5}", "Bus");
  for (const auto& col : c.columns) out += fmt::format("  {:>24}", col);
  out += fmt::format("  {:>10}\n", "max |d|");
  for (std::size_t i = 0; i < nb; ++i) {
    out += fmt::format("{:>5}", c.bus_ids[i]);
    for (const auto& v : c.lpv) out += fmt::format("  {:>24}", fixed2(v(idx(i))));
    out += fmt::format("  {:>10}\n", fixed2(c.max_abs_delta(idx(i))));
  }
  out += fmt::format("{:>5}", "cost");
  for (double t : c.total_cost) out += fmt::format("  {:>24}", fixed2(t));
  out += fmt::format("\nmax relative delta, paper-literal vs covariance mode: {:.4e}\n", c.max_rel_delta);
  if (c.clamped_labels.empty() && c.clamp_events.empty()) {
    out += "paper-literal clamp events: none\n";
  } else {
    out += "paper-literal clamp events:\n";
    for (const auto& l : c.clamped_labels) out += "  at solution: branch " + l + "\n";
    for (const auto& e : c.clamp_events) out += "  " + e + "\n";
  }
  return out;
}

}  // namespace ccopf
