#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccopf/errors.hpp"

namespace ccopf {

/// Network bus. A negative load models non-dispatchable generation.
struct Bus {
  int id = 0;
  double load = 0.0;   // MW
  double sigma = 0.0;  // MW, standard deviation of the injection fluctuation

  bool operator==(const Bus&) const = default;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;         // MW
  double p_max = 0.0;         // MW
  double cost_energy = 0.0;   // $/MWh
  double cost_reserve = 0.0;  // $/MWh of regulation capacity

  bool operator==(const Generator&) const = default;
};

/// DC branch. `reactance` is the effective series reactance in pu, with any
/// transformer tap already folded in. A missing rating means unconstrained.
struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;
  std::optional<double> rating;  // MW (MVA rating at unity voltage)

  bool operator==(const Branch&) const = default;
};

struct NetworkCase {
  double base_mva = 100.0;
  int reference_bus = 0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;

  bool operator==(const NetworkCase&) const = default;

  /// Position of a bus id in `buses`; throws InputError for unknown ids.
  std::size_t bus_index(int id) const;
  std::optional<std::size_t> find_bus(int id) const;

  double net_load() const;
  std::vector<double> sigmas() const;
  std::vector<double> loads() const;
  /// For each generator, the index of its bus in `buses`.
  std::vector<std::size_t> generator_bus_indices() const;
};

/// Violation probabilities of the reserve and branch chance constraints.
struct UncertaintyConfig {
  double epsilon_a = 0.01;
  double epsilon_br = 0.01;

  /// Throws InputError("epsilon out of range") unless both are in (0, 0.5).
  void validate() const;
};

/// Returns one message per violated invariant, formatted "<field>: <rule>".
std::vector<std::string> validate_case(const NetworkCase& net);

/// Parses a JSON case document. Throws CaseSyntaxError or CaseValidationError.
NetworkCase parse_case(std::string_view text);
NetworkCase load_case_file(const std::string& path);

/// Canonical JSON rendering; parse_case(serialize_case(c)) == c for every valid case.
std::string serialize_case(const NetworkCase& net);

/// Modified IEEE 14-bus system with a 50 MW wind injection at bus 14 and
/// the 2-5 line limited to 100 MW.
NetworkCase builtin_case14();

}  // namespace ccopf
