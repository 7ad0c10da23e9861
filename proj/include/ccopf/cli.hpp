#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ccopf/report.hpp"

namespace ccopf {

enum class Command { run, solve, prices, settle, oracle, compare_modes, validate_case };

const char* to_string(Command c);

struct RunConfig {
  Command command = Command::run;
  std::string case_source = "builtin-14";  // or a path to a JSON case file
  Variant variant = Variant::with_reserves;
  VarianceMode mode = VarianceMode::covariance;
  PricingForm pricing = PricingForm::per_bus;
  double epsilon_a = 0.01;
  double epsilon_br = 0.01;
  OutputFormat format = OutputFormat::table;
  bool oracle = false;  // adds the LPV oracle table to a full run
  double delta = 0.05;  // MW
  ReservePriceRule reserve_rule = ReservePriceRule::uniform_clearing;
  std::optional<int> bus;  // settle: single participant
  std::string out;         // empty: stdout
  std::string trace_path;
  std::string dump_problem_path;
  std::string dump_gamma_path;

  /// Throws InputError.
  void validate() const;
};

NetworkCase load_case(const std::string& source);

ModeComparison compare_modes(const RunConfig& cfg);

/// Runs the configured pipeline. Exit status: 0 success, 1 infeasible or
/// not converged, 2 input error. Diagnostics go to `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv and calls run(); argument errors exit 2.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ccopf
