#include "ccopf/network.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace ccopf {

Susceptance build_susceptance(const NetworkCase& net) {
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  Susceptance s{Eigen::MatrixXd::Zero(n, n),
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.branches.size()), n)};
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    if (!(br.reactance > 0.0)) throw InputError(fmt::format("branch {}: reactance must be positive", k));
    const auto f = static_cast<Eigen::Index>(net.bus_index(br.from_bus));
    const auto t = static_cast<Eigen::Index>(net.bus_index(br.to_bus));
    const double b = 1.0 / br.reactance;
    s.nodal(f, f) += b;
    s.nodal(t, t) += b;
    s.nodal(f, t) -= b;
    s.nodal(t, f) -= b;
    s.branch(static_cast<Eigen::Index>(k), f) = b;
    s.branch(static_cast<Eigen::Index>(k), t) = -b;
  }
  return s;
}

namespace {

struct ReducedSystem {
  std::vector<Eigen::Index> keep;  // bus positions other than the reference
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

ReducedSystem factor_reduced(const NetworkCase& net, const Susceptance& s) {
  const auto ref = static_cast<Eigen::Index>(net.bus_index(net.reference_bus));
  ReducedSystem rs;
  for (Eigen::Index i = 0; i < s.nodal.rows(); ++i)
    if (i != ref) rs.keep.push_back(i);
  const auto m = static_cast<Eigen::Index>(rs.keep.size());
  Eigen::MatrixXd reduced(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) reduced(r, c) = s.nodal(rs.keep[r], rs.keep[c]);
  if (m > 0) {
    rs.lu.compute(reduced);
    // A floating island makes the reduced matrix singular; catch it through the
    // smallest pivot relative to the largest.
    const Eigen::VectorXd diag = rs.lu.matrixLU().diagonal().cwiseAbs();
    if (!(diag.minCoeff() > 1e-10 * std::max(1.0, diag.maxCoeff())))
      throw SolveError("disconnected network: reduced susceptance matrix is singular");
  }
  return rs;
}

}  // namespace

ShiftFactorMatrix shift_factors(const NetworkCase& net, const SlackSpec& slack, BranchSet set) {
  const Susceptance s = build_susceptance(net);
  const ReducedSystem rs = factor_reduced(net, s);
  const auto n = static_cast<Eigen::Index>(net.buses.size());

  ShiftFactorMatrix sf;
  for (std::size_t k = 0; k < net.branches.size(); ++k)
    if (set == BranchSet::all || net.branches[k].rating) sf.branches.push_back(k);
  sf.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sf.branches.size()), n);
  sf.slack = ReferenceBus{net.reference_bus};

  // B_red is symmetric, so row j of Bf_red * B_red^-1 is the solution of B_red y = Bf_red(j,:)^T.
  for (std::size_t r = 0; r < sf.branches.size(); ++r) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rs.keep.size()));
    for (std::size_t c = 0; c < rs.keep.size(); ++c)
      rhs(static_cast<Eigen::Index>(c)) = s.branch(static_cast<Eigen::Index>(sf.branches[r]), rs.keep[c]);
    if (rhs.size() == 0) continue;
    const Eigen::VectorXd y = rs.lu.solve(rhs);
    for (std::size_t c = 0; c < rs.keep.size(); ++c)
      sf.gamma(static_cast<Eigen::Index>(r), rs.keep[c]) = y(static_cast<Eigen::Index>(c));
  }
  if (!sf.gamma.allFinite()) throw SolveError("disconnected network: non-finite shift factors");

  if (const auto* ref = std::get_if<ReferenceBus>(&slack)) {
    if (ref->id == net.reference_bus) return sf;
    // Moving the reference to another bus subtracts that bus's column.
    const auto col = static_cast<Eigen::Index>(net.bus_index(ref->id));
    const Eigen::VectorXd shift = sf.gamma.col(col);
    sf.gamma.colwise() -= shift;
    sf.slack = *ref;
    return sf;
  }
  return reslack(sf, std::get<Distributed>(slack).weights);
}

ShiftFactorMatrix reslack(const ShiftFactorMatrix& sf, const std::vector<double>& weights) {
  if (static_cast<Eigen::Index>(weights.size()) != sf.gamma.cols())
    throw InputError("slack weights must have one entry per bus");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw InputError(fmt::format("slack weights sum to {}, expected 1", total));
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  ShiftFactorMatrix out = sf;
  const Eigen::VectorXd shift = sf.gamma * w;
  out.gamma.colwise() -= shift;
  out.slack = Distributed{weights};
  return out;
}

std::vector<double> pmax_slack_weights(const NetworkCase& net) {
  std::vector<double> w(net.buses.size(), 0.0);
  double total = 0.0;
  for (const auto& g : net.generators) total += g.p_max;
  if (!(total > 0.0)) throw InputError("distributed slack needs positive total pmax");
  for (const auto& g : net.generators) w[net.bus_index(g.bus)] += g.p_max / total;
  return w;
}

Eigen::VectorXd dc_branch_flows(const NetworkCase& net, const Eigen::VectorXd& injections) {
  const Susceptance s = build_susceptance(net);
  const ReducedSystem rs = factor_reduced(net, s);
  Eigen::VectorXd p(static_cast<Eigen::Index>(rs.keep.size()));
  for (std::size_t c = 0; c < rs.keep.size(); ++c)
    p(static_cast<Eigen::Index>(c)) = injections(rs.keep[c]) / net.base_mva;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(s.nodal.rows());
  if (p.size() > 0) {
    const Eigen::VectorXd reduced_theta = rs.lu.solve(p);
    for (std::size_t c = 0; c < rs.keep.size(); ++c) theta(rs.keep[c]) = reduced_theta(static_cast<Eigen::Index>(c));
  }
  return s.branch * theta * net.base_mva;
}

GenWeightMatrix gen_weight_matrix(const NetworkCase& net) {
  const auto gen_bus = net.generator_bus_indices();
  const std::size_t n = net.buses.size();
  GenWeightMatrix w{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gen_bus.size()), static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::size_t m = 0; m < gen_bus.size(); ++m)
      if (gen_bus[m] != i) denom += net.generators[m].p_max;
    if (!(denom > 0.0)) {
      if (net.buses[i].sigma > 0.0)
        throw InputError(fmt::format("empty recourse set for variability at bus {}", net.buses[i].id));
      continue;
    }
    for (std::size_t m = 0; m < gen_bus.size(); ++m)
      if (gen_bus[m] != i)
        w.d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = net.generators[m].p_max / denom;
  }
  return w;
}

std::string dump_gamma_csv(const NetworkCase& net, const ShiftFactorMatrix& sf) {
  std::string out = "branch";
  for (const auto& b : net.buses) out += fmt::format(",bus{}", b.id);
  out += '\n';
  for (std::size_t r = 0; r < sf.branches.size(); ++r) {
    const auto& br = net.branches[sf.branches[r]];
    out += fmt::format("{}-{}", br.from_bus, br.to_bus);
    for (Eigen::Index c = 0; c < sf.gamma.cols(); ++c)
      out += fmt::format(",{:.17g}", sf.gamma(static_cast<Eigen::Index>(r), c));
    out += '\n';
  }
  return out;
}

}  // namespace ccopf
