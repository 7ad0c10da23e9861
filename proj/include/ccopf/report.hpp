#pragma once

#include <string>
#include <vector>

#include "ccopf/pricing.hpp"
#include "ccopf/settlement.hpp"

namespace ccopf {

enum class OutputFormat { table, csv, json };

const char* to_string(OutputFormat f);
OutputFormat parse_output_format(const std::string& s);

/// Two decimals, ties to even, never "-0.00". Display only; csv and json
/// carry full precision.
std::string fixed2(double v);

/// Per-bus LPV under both variance modes and both pricing forms.
struct ModeComparison {
  std::vector<int> bus_ids;
  // columns: covariance/per-bus, covariance/paper-literal, paper-literal/per-bus, paper-literal/paper-literal
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> lpv;
  std::vector<double> total_cost;
  Eigen::VectorXd max_abs_delta;   // per bus, paper-literal vs covariance mode, same pricing form
  double max_rel_delta = 0.0;      // over all buses and columns
  std::vector<std::size_t> clamped_branches;  // paper-literal radicand clamps at its solution
  std::vector<std::string> clamped_labels;
  std::vector<std::string> clamp_events;      // per iteration, from the paper-literal trace
};

std::string render_dispatch(const PriceReport& rep, OutputFormat f);
std::string render_prices(const PriceReport& rep, OutputFormat f);
std::string render_settlement(const SettlementReport& rep, OutputFormat f);
std::string render_participant(const ParticipantView& view, OutputFormat f);
std::string render_oracle(const std::vector<OracleRow>& rows, double delta, OutputFormat f);
std::string render_comparison(const ModeComparison& cmp, OutputFormat f);

}  // namespace ccopf
