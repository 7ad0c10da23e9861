#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ccopf/case_model.hpp"

namespace ccopf::testing {

/// Sampling oracle for the recourse model: every bus draws an independent
/// Gaussian load deviation dL_i ~ N(0, sigma_i^2) and generator g responds
/// with a_g = beta_g * sum_i dL_i. Flows come from DC angle solves
/// (dc_branch_flows), never from shift factors.
struct ViolationCounts {
  std::size_t draws = 0;
  std::vector<double> reserve_up;    // frequency of a_g > A_g, per generator
  std::vector<double> reserve_down;  // frequency of a_g < -A_g
  std::vector<std::size_t> branches; // case indices of the rated branches
  std::vector<double> flow_upper;    // frequency of flow > rating
  std::vector<double> flow_lower;    // frequency of flow < -rating

  /// Standard error of a frequency whose true value is p.
  double std_error(double p) const;
};

ViolationCounts sample_violations(const NetworkCase& net, const Eigen::VectorXd& p_g, const Eigen::VectorXd& a_cap,
                                  const Eigen::VectorXd& beta, std::size_t draws, std::uint64_t seed);

/// Sample standard deviation of one branch's flow deviation under the recourse.
double sample_flow_std(const NetworkCase& net, std::size_t branch, const Eigen::VectorXd& beta, std::size_t draws,
                       std::uint64_t seed);

}  // namespace ccopf::testing
