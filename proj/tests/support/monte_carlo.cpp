#include "monte_carlo.hpp"

#include <cmath>
#include <random>

#include "ccopf/network.hpp"

namespace ccopf::testing {

namespace {

// Flow change on every branch per MW of load increase at each bus, with the
// generators picking up the imbalance in proportion to beta.
Eigen::MatrixXd recourse_response(const NetworkCase& net, const Eigen::VectorXd& beta) {
  const auto nb = static_cast<Eigen::Index>(net.buses.size());
  Eigen::VectorXd pickup = Eigen::VectorXd::Zero(nb);
  for (std::size_t g = 0; g < net.generators.size(); ++g)
    pickup(static_cast<Eigen::Index>(net.bus_index(net.generators[g].bus))) += beta(static_cast<Eigen::Index>(g));

  Eigen::MatrixXd m(static_cast<Eigen::Index>(net.branches.size()), nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    Eigen::VectorXd u = pickup;
    u(i) -= 1.0;
    m.col(i) = dc_branch_flows(net, u);
  }
  return m;
}

}  // namespace

double ViolationCounts::std_error(double p) const { return std::sqrt(p * (1.0 - p) / static_cast<double>(draws)); }

ViolationCounts sample_violations(const NetworkCase& net, const Eigen::VectorXd& p_g, const Eigen::VectorXd& a_cap,
                                  const Eigen::VectorXd& beta, std::size_t draws, std::uint64_t seed) {
  const auto nb = static_cast<Eigen::Index>(net.buses.size());
  const auto ng = net.generators.size();

  Eigen::VectorXd injection = Eigen::VectorXd::Zero(nb);
  for (Eigen::Index i = 0; i < nb; ++i) injection(i) = -net.buses[static_cast<std::size_t>(i)].load;
  for (std::size_t g = 0; g < ng; ++g)
    injection(static_cast<Eigen::Index>(net.bus_index(net.generators[g].bus))) += p_g(static_cast<Eigen::Index>(g));
  const Eigen::VectorXd nominal = dc_branch_flows(net, injection);
  const Eigen::MatrixXd response = recourse_response(net, beta);

  ViolationCounts out;
  out.draws = draws;
  std::vector<Eigen::Index> rated;
  for (std::size_t b = 0; b < net.branches.size(); ++b)
    if (net.branches[b].rating) {
      out.branches.push_back(b);
      rated.push_back(static_cast<Eigen::Index>(b));
    }
  std::vector<std::size_t> up(ng, 0), down(ng, 0), fu(rated.size(), 0), fl(rated.size(), 0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd dl(nb);
  for (std::size_t s = 0; s < draws; ++s) {
    for (Eigen::Index i = 0; i < nb; ++i) dl(i) = net.buses[static_cast<std::size_t>(i)].sigma * normal(rng);
    const double total = dl.sum();
    for (std::size_t g = 0; g < ng; ++g) {
      const double a = beta(static_cast<Eigen::Index>(g)) * total;
      const double cap = a_cap(static_cast<Eigen::Index>(g));
      if (a > cap) ++up[g];
      if (a < -cap) ++down[g];
    }
    for (std::size_t r = 0; r < rated.size(); ++r) {
      const double flow = nominal(rated[r]) + response.row(rated[r]).dot(dl);
      const double limit = *net.branches[out.branches[r]].rating;
      if (flow > limit) ++fu[r];
      if (flow < -limit) ++fl[r];
    }
  }
  const double n = static_cast<double>(draws);
  for (std::size_t g = 0; g < ng; ++g) {
    out.reserve_up.push_back(static_cast<double>(up[g]) / n);
    out.reserve_down.push_back(static_cast<double>(down[g]) / n);
  }
  for (std::size_t r = 0; r < rated.size(); ++r) {
    out.flow_upper.push_back(static_cast<double>(fu[r]) / n);
    out.flow_lower.push_back(static_cast<double>(fl[r]) / n);
  }
  return out;
}

double sample_flow_std(const NetworkCase& net, std::size_t branch, const Eigen::VectorXd& beta, std::size_t draws,
                       std::uint64_t seed) {
  const auto nb = static_cast<Eigen::Index>(net.buses.size());
  const Eigen::VectorXd row = recourse_response(net, beta).row(static_cast<Eigen::Index>(branch)).transpose();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < nb; ++i) f += row(i) * net.buses[static_cast<std::size_t>(i)].sigma * normal(rng);
    sum += f;
    sumsq += f * f;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  return std::sqrt((sumsq - n * mean * mean) / (n - 1.0));
}

}  // namespace ccopf::testing
