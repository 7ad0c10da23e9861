#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ccopf/case_model.hpp"

namespace ccopf {

/// DC susceptances in per unit. `nodal` is buses x buses with zero row sums;
/// `branch` maps bus angles to branch flows (branches x buses).
struct Susceptance {
  Eigen::MatrixXd nodal;
  Eigen::MatrixXd branch;
};

Susceptance build_susceptance(const NetworkCase& net);

struct ReferenceBus {
  int id = 0;
};

/// Balancing injection spread over buses with the given weights (one per bus, summing to 1).
struct Distributed {
  std::vector<double> weights;
};

using SlackSpec = std::variant<ReferenceBus, Distributed>;

enum class BranchSet { rated, all };

/// Injection shift factors. Row r is case branch `branches[r]`; column i is bus position i.
/// Flows in MW equal gamma * (injections in MW) for balanced injection vectors.
struct ShiftFactorMatrix {
  Eigen::MatrixXd gamma;
  std::vector<std::size_t> branches;
  SlackSpec slack;
};

ShiftFactorMatrix shift_factors(const NetworkCase& net, const SlackSpec& slack, BranchSet set = BranchSet::rated);

/// Re-expresses an existing shift-factor matrix under a distributed slack.
ShiftFactorMatrix reslack(const ShiftFactorMatrix& sf, const std::vector<double>& weights);

/// Slack weights proportional to p_max of every generator, aggregated per bus.
std::vector<double> pmax_slack_weights(const NetworkCase& net);

/// DC power flow branch flows (MW) for a balanced injection vector, solved
/// through the reduced nodal matrix. Independent of the shift-factor path.
Eigen::VectorXd dc_branch_flows(const NetworkCase& net, const Eigen::VectorXd& injections);

/// Share d(m, i) of a 1 MW fluctuation at bus position i that generator m picks up.
/// Generators sitting at bus i take no share of it.
struct GenWeightMatrix {
  Eigen::MatrixXd d;  // generators x buses
};

GenWeightMatrix gen_weight_matrix(const NetworkCase& net);

/// Writes gamma as comma-separated rows, first column the branch label.
std::string dump_gamma_csv(const NetworkCase& net, const ShiftFactorMatrix& sf);

}  // namespace ccopf
