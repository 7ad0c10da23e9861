#include "ccopf/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

std::string branch_label(const CcOpfProblem& p, std::size_t row) {
  const auto& br = p.net.branches[p.gamma.branches[row]];
  return fmt::format("{}-{}", br.from_bus, br.to_bus);
}

UncertaintyConfig uncertainty(const RunConfig& cfg) {
  UncertaintyConfig u;
  u.epsilon_a = cfg.epsilon_a;
  u.epsilon_br = cfg.epsilon_br;
  return u;
}

void write_side_files(const RunConfig& cfg, const PriceReport& rep) {
  if (!cfg.trace_path.empty()) write_file(cfg.trace_path, format_trace(rep.solution));
  if (!cfg.dump_problem_path.empty()) write_file(cfg.dump_problem_path, dump_problem(rep.problem));
  if (!cfg.dump_gamma_path.empty()) write_file(cfg.dump_gamma_path, dump_gamma_csv(rep.problem.net, rep.problem.gamma));
}

std::string validate_summary(const NetworkCase& net, OutputFormat f) {
  const auto rated = std::count_if(net.branches.begin(), net.branches.end(), [](const auto& b) { return b.rating; });
  if (f == OutputFormat::json)
    return fmt::format("{{\n  \"valid\": true,\n  \"buses\": {},\n  \"generators\": {},\n  \"branches\": {},\n"
                       "  \"rated_branches\": {}\n}}\n",
                       net.buses.size(), net.generators.size(), net.branches.size(), rated);
  if (f == OutputFormat::csv)
    return fmt::format("valid,buses,generators,branches,rated_branches\n1,{},{},{},{}\n", net.buses.size(),
                       net.generators.size(), net.branches.size(), rated);
  return fmt::format("case valid: {} buses, {} generators, {} branches ({} rated), net load {} MW\n",
                     net.buses.size(), net.generators.size(), net.branches.size(), rated, fixed2(net.net_load()));
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::run: return "run";
    case Command::solve: return "solve";
    case Command::prices: return "prices";
    case Command::settle: return "settle";
    case Command::oracle: return "oracle";
    case Command::compare_modes: return "compare-modes";
    case Command::validate_case: return "validate-case";
  }
  return "?";
}

void RunConfig::validate() const {
  uncertainty(*this).validate();
  if ((oracle || command == Command::oracle) && !(delta > 0.0)) throw InputError("delta must be positive");
}

NetworkCase load_case(const std::string& source) {
  if (source == "builtin-14" || source == "builtin") return builtin_case14();
  return load_case_file(source);
}

ModeComparison compare_modes(const RunConfig& cfg) {
  const auto net = load_case(cfg.case_source);
  const auto u = uncertainty(cfg);
  ModeComparison c;
  for (const auto& b : net.buses) c.bus_ids.push_back(b.id);

  for (auto mode : {VarianceMode::covariance, VarianceMode::paper_literal}) {
    const auto rep = price_report(net, u, cfg.variant, mode, PricingForm::per_bus);
    for (auto form : {PricingForm::per_bus, PricingForm::paper_literal}) {
      c.columns.push_back(fmt::format("{}/{}", to_string(mode), to_string(form)));
      c.lpv.push_back(lpv_analytic(rep.problem, rep.solution, form).lpv);
      c.total_cost.push_back(rep.solution.total_cost());
    }
    if (mode == VarianceMode::paper_literal) {
      for (const auto& t : rep.solution.flow_std)
        if (t.clamped) {
          c.clamped_branches.push_back(t.branch);
          c.clamped_labels.push_back(branch_label(rep.problem, t.branch));
        }
      for (const auto& r : rep.solution.trace) {
        if (r.clamped_branches.empty()) continue;
        std::string e = fmt::format("iteration {}: branches", r.iteration);
        for (auto b : r.clamped_branches) e += " " + branch_label(rep.problem, b);
        c.clamp_events.push_back(e);
      }
    }
  }

  const auto nb = static_cast<Eigen::Index>(c.bus_ids.size());
  c.max_abs_delta = Eigen::VectorXd::Zero(nb);
  // Variance-mode deltas: paper-literal against covariance under the same pricing form.
  for (std::size_t k = 0; k < 2; ++k)
    for (Eigen::Index i = 0; i < nb; ++i) {
      const double d = std::abs(c.lpv[k + 2](i) - c.lpv[k](i));
      c.max_abs_delta(i) = std::max(c.max_abs_delta(i), d);
      c.max_rel_delta = std::max(c.max_rel_delta, d / std::max(1.0, std::abs(c.lpv[k](i))));
    }
  return c;
}

int run(const RunConfig& cfg, std::ostream& os, std::ostream& err) {
  std::string text;
  int status = 0;
  try {
    cfg.validate();
    const auto net = load_case(cfg.case_source);
    const auto u = uncertainty(cfg);

    switch (cfg.command) {
      case Command::validate_case:
        text = validate_summary(net, cfg.format);
        break;
      case Command::compare_modes:
        text = render_comparison(compare_modes(cfg), cfg.format);
        break;
      case Command::oracle:
        text = render_oracle(oracle_sweep(net, u, cfg.variant, cfg.mode, cfg.delta), cfg.delta, cfg.format);
        break;
      default: {
        const auto rep = price_report(net, u, cfg.variant, cfg.mode, cfg.pricing);
        write_side_files(cfg, rep);
        if (!rep.solution.converged) {
          err << fmt::format("error: solver did not converge within {} iterations\n", rep.solution.iterations);
          status = 1;
        }
        const bool all = cfg.command == Command::run;
        if (all || cfg.command == Command::solve) text += render_dispatch(rep, cfg.format);
        if (all || cfg.command == Command::prices) text += render_prices(rep, cfg.format);
        if (all || cfg.command == Command::settle) {
          const auto st = settle(net, rep.solution, rep, cfg.reserve_rule);
          text += cfg.bus ? render_participant(participant_view(st, *cfg.bus), cfg.format)
                          : render_settlement(st, cfg.format);
        }
        if (all && cfg.oracle)
          text += render_oracle(oracle_sweep(net, u, cfg.variant, cfg.mode, cfg.delta), cfg.delta, cfg.format);
      }
    }
  } catch (const CaseValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  if (cfg.out.empty()) {
    os << text;
  } else {
    try {
      write_file(cfg.out, text);
    } catch (const InputError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return status;
}

int cli_main(int argc, char** argv, std::ostream& os, std::ostream& err) {
  CLI::App app{"Chance-constrained DC-OPF with regulation reserves and locational prices of variability"};
  app.set_help_all_flag("--help-all");
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::string variant = "with-reserves", mode = "covariance", pricing = "per-bus", format = "table",
              rule = "uniform-clearing";
  int bus = 0;

  const std::map<std::string, Variant> variants{{"with-reserves", Variant::with_reserves},
                                                {"without-reserves", Variant::without_reserves}};
  const std::map<std::string, VarianceMode> modes{{"covariance", VarianceMode::covariance},
                                                  {"paper-literal", VarianceMode::paper_literal}};
  const std::map<std::string, PricingForm> forms{{"per-bus", PricingForm::per_bus},
                                                 {"paper-literal", PricingForm::paper_literal}};
  const std::map<std::string, ReservePriceRule> rules{{"uniform-clearing", ReservePriceRule::uniform_clearing},
                                                      {"pay-as-bid", ReservePriceRule::pay_as_bid}};

  auto add_common = [&](CLI::App* a) {
    a->add_option("--case", cfg.case_source, "builtin-14 or a JSON case file")->capture_default_str();
    a->add_option("--variant", variant, "with-reserves | without-reserves")
        ->check(CLI::IsMember({"with-reserves", "without-reserves"}))
        ->capture_default_str();
    a->add_option("--variance-mode", mode, "covariance | paper-literal")
        ->check(CLI::IsMember({"covariance", "paper-literal"}))
        ->capture_default_str();
    a->add_option("--pricing-form", pricing, "per-bus | paper-literal")
        ->check(CLI::IsMember({"per-bus", "paper-literal"}))
        ->capture_default_str();
    a->add_option("--epsilon-a", cfg.epsilon_a, "violation probability, reserve constraints")->capture_default_str();
    a->add_option("--epsilon-br", cfg.epsilon_br, "violation probability, branch constraints")->capture_default_str();
    a->add_option("--format", format, "table | csv | json")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    a->add_option("--delta", cfg.delta, "finite-difference step for the LPV oracle (MW)")->capture_default_str();
    a->add_option("--out", cfg.out, "write the report here instead of stdout");
    a->add_option("--trace", cfg.trace_path, "write the solver iteration trace");
    a->add_option("--dump-problem", cfg.dump_problem_path, "write the assembled constraint listing");
    a->add_option("--dump-gamma", cfg.dump_gamma_path, "write the shift-factor matrix as CSV");
  };

  add_common(&app);
  app.add_flag("--oracle", cfg.oracle, "append the LPV oracle comparison");
  app.add_option("--reserve-rule", rule, "uniform-clearing | pay-as-bid")
      ->check(CLI::IsMember({"uniform-clearing", "pay-as-bid"}));

  auto* solve = app.add_subcommand("solve", "dispatch table");
  auto* prices = app.add_subcommand("prices", "LMP and LPV table");
  auto* settle_cmd = app.add_subcommand("settle", "settlement report");
  auto* oracle = app.add_subcommand("oracle", "analytic vs empirical LPV");
  auto* compare = app.add_subcommand("compare-modes", "LPV under both variance modes and pricing forms");
  auto* validate = app.add_subcommand("validate-case", "parse and validate a case");
  for (auto* a : {solve, prices, settle_cmd, oracle, compare, validate}) add_common(a);
  settle_cmd->add_option("--bus", bus, "line items for one bus");
  settle_cmd->add_option("--reserve-rule", rule, "uniform-clearing | pay-as-bid")
      ->check(CLI::IsMember({"uniform-clearing", "pay-as-bid"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    os << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    os << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (solve->parsed()) cfg.command = Command::solve;
  if (prices->parsed()) cfg.command = Command::prices;
  if (settle_cmd->parsed()) cfg.command = Command::settle;
  if (oracle->parsed()) cfg.command = Command::oracle;
  if (compare->parsed()) cfg.command = Command::compare_modes;
  if (validate->parsed()) cfg.command = Command::validate_case;
  if (settle_cmd->parsed() && settle_cmd->count("--bus") > 0) cfg.bus = bus;

  cfg.variant = variants.at(variant);
  cfg.mode = modes.at(mode);
  cfg.pricing = forms.at(pricing);
  cfg.format = parse_output_format(format);
  cfg.reserve_rule = rules.at(rule);
  return run(cfg, os, err);
}

}  // namespace ccopf
