#include "ccopf/case_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace ccopf {

using Json = nlohmann::ordered_json;

CaseValidationError::CaseValidationError(std::vector<std::string> violations)
    : InputError([&] {
        std::string msg = "invalid case:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::optional<std::size_t> NetworkCase::find_bus(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  return std::nullopt;
}

std::size_t NetworkCase::bus_index(int id) const {
  if (auto idx = find_bus(id)) return *idx;
  throw InputError(fmt::format("unknown bus {}", id));
}

double NetworkCase::net_load() const {
  return std::accumulate(buses.begin(), buses.end(), 0.0,
                         [](double s, const Bus& b) { return s + b.load; });
}

std::vector<double> NetworkCase::sigmas() const {
  std::vector<double> out;
  out.reserve(buses.size());
  for (const auto& b : buses) out.push_back(b.sigma);
  return out;
}

std::vector<double> NetworkCase::loads() const {
  std::vector<double> out;
  out.reserve(buses.size());
  for (const auto& b : buses) out.push_back(b.load);
  return out;
}

std::vector<std::size_t> NetworkCase::generator_bus_indices() const {
  std::vector<std::size_t> out;
  out.reserve(generators.size());
  for (const auto& g : generators) out.push_back(bus_index(g.bus));
  return out;
}

void UncertaintyConfig::validate() const {
  auto ok = [](double e) { return std::isfinite(e) && e > 0.0 && e < 0.5; };
  if (!ok(epsilon_a) || !ok(epsilon_br))
    throw InputError(fmt::format("epsilon out of range: epsilon_a={}, epsilon_br={} (need 0 < eps < 0.5)",
                                 epsilon_a, epsilon_br));
}

std::vector<std::string> validate_case(const NetworkCase& net) {
  std::vector<std::string> out;
  auto add = [&](std::string field, std::string_view rule) {
    out.push_back(fmt::format("{}: {}", field, rule));
  };

  if (!(std::isfinite(net.base_mva) && net.base_mva > 0.0)) add("system.base_mva", "base_mva must be positive");
  if (net.buses.empty()) add("buses", "empty bus set");
  if (net.generators.empty()) add("generators", "at least one generator required");

  std::set<int> ids;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const auto& b = net.buses[i];
    auto field = fmt::format("buses[{}]", i);
    if (!ids.insert(b.id).second) add(field + ".id", fmt::format("duplicate bus id {}", b.id));
    if (!std::isfinite(b.load)) add(field + ".load_mw", "load must be finite");
    if (!(std::isfinite(b.sigma) && b.sigma >= 0.0)) add(field + ".sigma_mw", "sigma nonnegative");
  }
  if (!net.buses.empty() && !ids.count(net.reference_bus))
    add("system.reference_bus", fmt::format("reference bus {} does not exist", net.reference_bus));

  double capacity = 0.0;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const auto& g = net.generators[i];
    auto field = fmt::format("generators[{}]", i);
    if (!ids.count(g.bus)) add(field + ".bus", fmt::format("unknown bus {}", g.bus));
    if (!(std::isfinite(g.p_min) && g.p_min >= 0.0)) add(field + ".pmin_mw", "pmin must be nonnegative");
    if (!(std::isfinite(g.p_max) && g.p_max >= g.p_min)) add(field + ".pmax_mw", "pmax must be at least pmin");
    if (!(std::isfinite(g.cost_energy) && g.cost_energy >= 0.0))
      add(field + ".cost_energy", "cost must be nonnegative");
    if (!(std::isfinite(g.cost_reserve) && g.cost_reserve >= 0.0))
      add(field + ".cost_reserve", "cost must be nonnegative");
    if (std::isfinite(g.p_max)) capacity += g.p_max;
  }

  bool endpoints_ok = true;
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    auto field = fmt::format("branches[{}]", k);
    if (!ids.count(br.from_bus)) { add(field + ".from", fmt::format("unknown bus {}", br.from_bus)); endpoints_ok = false; }
    if (!ids.count(br.to_bus)) { add(field + ".to", fmt::format("unknown bus {}", br.to_bus)); endpoints_ok = false; }
    if (br.from_bus == br.to_bus) add(field, "from and to must differ");
    if (!(std::isfinite(br.reactance) && br.reactance > 0.0)) add(field + ".reactance_pu", "reactance must be positive");
    if (br.rating && !(std::isfinite(*br.rating) && *br.rating > 0.0))
      add(field + ".rating_mva", "rating must be positive");
  }

  if (!net.buses.empty() && endpoints_ok && ids.size() == net.buses.size()) {
    // Connectivity by union-find over bus positions.
    std::vector<std::size_t> parent(net.buses.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& br : net.branches)
      parent[find(net.bus_index(br.from_bus))] = find(net.bus_index(br.to_bus));
    std::size_t roots = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) roots += (find(i) == i);
    if (roots > 1) add("branches", "network is not connected");
  }

  if (!net.generators.empty() && capacity < net.net_load())
    add("generators", fmt::format("total pmax {} below net load {}", capacity, net.net_load()));
  return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& rule) {
  throw CaseValidationError({fmt::format("{}: {}", where, rule)});
}

void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      schema_error(where, fmt::format("unknown field '{}'", item.key()));
  }
}

double number(const Json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, fmt::format("missing field '{}'", key));
  if (!it->is_number()) schema_error(fmt::format("{}.{}", where, key), "expected a number");
  return it->get<double>();
}

int integer(const Json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, fmt::format("missing field '{}'", key));
  if (!it->is_number_integer()) schema_error(fmt::format("{}.{}", where, key), "expected an integer");
  return it->get<int>();
}

const Json& array(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) schema_error(key, "missing section");
  if (!it->is_array()) schema_error(key, "expected an array");
  return *it;
}

}  // namespace

NetworkCase parse_case(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw CaseSyntaxError(fmt::format("case syntax error at byte {}: {}", e.byte, e.what()), e.byte);
  }

  reject_unknown(doc, "document", {"system", "buses", "generators", "branches"});
  NetworkCase net;

  auto sys = doc.find("system");
  if (sys == doc.end()) schema_error("system", "missing section");
  reject_unknown(*sys, "system", {"base_mva", "reference_bus"});
  net.base_mva = number(*sys, "system", "base_mva");

  const auto& buses = array(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    auto where = fmt::format("buses[{}]", i);
    reject_unknown(buses[i], where, {"id", "load_mw", "sigma_mw"});
    net.buses.push_back({integer(buses[i], where, "id"), number(buses[i], where, "load_mw"),
                         number(buses[i], where, "sigma_mw")});
  }

  if (sys->contains("reference_bus"))
    net.reference_bus = integer(*sys, "system", "reference_bus");
  else if (!net.buses.empty())
    net.reference_bus = std::min_element(net.buses.begin(), net.buses.end(),
                                         [](const Bus& a, const Bus& b) { return a.id < b.id; })->id;

  const auto& gens = array(doc, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    auto where = fmt::format("generators[{}]", i);
    reject_unknown(gens[i], where, {"bus", "pmin_mw", "pmax_mw", "cost_energy", "cost_reserve"});
    net.generators.push_back({integer(gens[i], where, "bus"), number(gens[i], where, "pmin_mw"),
                              number(gens[i], where, "pmax_mw"), number(gens[i], where, "cost_energy"),
                              number(gens[i], where, "cost_reserve")});
  }

  const auto& branches = array(doc, "branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    auto where = fmt::format("branches[{}]", i);
    reject_unknown(branches[i], where, {"from", "to", "reactance_pu", "rating_mva"});
    Branch br{integer(branches[i], where, "from"), integer(branches[i], where, "to"),
              number(branches[i], where, "reactance_pu"), std::nullopt};
    if (branches[i].contains("rating_mva")) br.rating = number(branches[i], where, "rating_mva");
    net.branches.push_back(br);
  }

  if (auto violations = validate_case(net); !violations.empty()) throw CaseValidationError(std::move(violations));
  return net;
}

NetworkCase load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open case file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string serialize_case(const NetworkCase& net) {
  Json doc;
  doc["system"] = {{"base_mva", net.base_mva}, {"reference_bus", net.reference_bus}};
  Json buses = Json::array();
  for (const auto& b : net.buses) buses.push_back({{"id", b.id}, {"load_mw", b.load}, {"sigma_mw", b.sigma}});
  doc["buses"] = std::move(buses);
  Json gens = Json::array();
  for (const auto& g : net.generators)
    gens.push_back({{"bus", g.bus},
                    {"pmin_mw", g.p_min},
                    {"pmax_mw", g.p_max},
                    {"cost_energy", g.cost_energy},
                    {"cost_reserve", g.cost_reserve}});
  doc["generators"] = std::move(gens);
  Json branches = Json::array();
  for (const auto& br : net.branches) {
    Json row = {{"from", br.from_bus}, {"to", br.to_bus}, {"reactance_pu", br.reactance}};
    if (br.rating) row["rating_mva"] = *br.rating;
    branches.push_back(std::move(row));
  }
  doc["branches"] = std::move(branches);
  return doc.dump(2) + "\n";
}

NetworkCase builtin_case14() {
  NetworkCase net;
  net.base_mva = 100.0;
  net.reference_bus = 1;
  // sigma: 2% of |load|, 10% for the wind injection at bus 14.
  net.buses = {
      {1, 34, 0.68},   {2, 12, 0.24},  {3, 9, 0.18},   {4, 85, 1.70},  {5, 60, 1.20},
      {6, 22, 0.44},   {7, 103, 2.06}, {8, 30, 0.60},  {9, 61, 1.22},  {10, 74, 1.48},
      {11, 15, 0.30},  {12, 57, 1.14}, {13, 66, 1.32}, {14, -50, 5.00},
  };
  net.generators = {
      {1, 15, 332.4, 21, 16}, {2, 15, 140.0, 20, 11}, {3, 15, 100.0, 35, 13},
      {6, 15, 100.0, 39, 12}, {8, 15, 100.0, 40, 14},
  };
  // Standard IEEE 14-bus reactances. Transformer branches 4-7, 4-9 and 5-6
  // carry x*tap (taps 0.978, 0.969, 0.932).
  net.branches = {
      {1, 2, 0.05917, {}},     {1, 5, 0.22304, {}},     {2, 3, 0.19797, {}},     {2, 4, 0.17632, {}},
      {2, 5, 0.17388, 100.0},  {3, 4, 0.17103, {}},     {4, 5, 0.04211, {}},     {4, 7, 0.20451936, {}},
      {4, 9, 0.53893842, {}},  {5, 6, 0.23488264, {}},  {6, 11, 0.19890, {}},    {6, 12, 0.25581, {}},
      {6, 13, 0.13027, {}},    {7, 8, 0.17615, {}},     {7, 9, 0.11001, {}},     {9, 10, 0.08450, {}},
      {9, 14, 0.27038, {}},    {10, 11, 0.19207, {}},   {12, 13, 0.19988, {}},   {13, 14, 0.34802, {}},
  };
  return net;
}

}  // namespace ccopf
