#pragma once

#include <string>
#include <vector>

#include "ccopf/pricing.hpp"

namespace ccopf {

/// uniform_clearing: every provider is paid the highest accepted reserve
/// offer (max C_A over generators with A > 1e-6 MW) for its capacity.
/// pay_as_bid: each provider is paid its own offer.
enum class ReservePriceRule { uniform_clearing, pay_as_bid };

const char* to_string(ReservePriceRule r);

struct GeneratorSettlement {
  std::size_t index = 0;
  int bus = 0;
  double p_mw = 0.0;
  double a_mw = 0.0;
  double energy_revenue = 0.0;   // $/hr, LMP at its bus x P
  double reserve_payment = 0.0;  // $/hr
};

struct BusSettlement {
  int bus = 0;
  double load_mw = 0.0;
  double sigma_mw = 0.0;
  double lmp = 0.0;
  double lpv = 0.0;
  /// LMP x load for positive load; a negative load is a non-dispatchable
  /// injection and is paid (negative value) here as well.
  double load_payment = 0.0;
  double variability_charge = 0.0;  // LPV x sigma
  double prorated_charge = 0.0;     // charge x pro-rating factor
};

struct SettlementReport {
  ReservePriceRule rule = ReservePriceRule::uniform_clearing;
  double clearing_price = 0.0;  // $/MW; highest accepted reserve offer
  std::vector<GeneratorSettlement> generators;
  std::vector<BusSettlement> buses;

  double load_payments = 0.0;             // sum over positive loads
  double generator_revenues = 0.0;        // dispatchable generators
  double nondispatchable_revenues = 0.0;  // sum over negative loads, paid at LMP
  /// load_payments - generator_revenues: conventional units only.
  double congestion_rent = 0.0;
  /// sum_i LMP_i load_i - sum_g LMP_g P_g, with non-dispatchable injections netted.
  double network_rent = 0.0;
  double variability_charges = 0.0;
  double reserve_payments = 0.0;
  double reconciliation_surplus = 0.0;  // charges - reserve payments
  double prorating_factor = 0.0;        // reserve payments / charges
};

/// Throws InputError when the price vectors do not cover the case.
SettlementReport settle(const NetworkCase& net, const DispatchSolution& solution, const PriceReport& prices,
                        ReservePriceRule rule = ReservePriceRule::uniform_clearing);

struct ParticipantLine {
  std::string item;    // e.g. "load energy payment"
  double amount = 0.0; // $/hr; payments by the participant are positive charges
};

struct ParticipantView {
  int bus = 0;
  std::vector<ParticipantLine> lines;
};

/// Line items for the load, non-dispatchable injection and generators at `bus`.
ParticipantView participant_view(const SettlementReport& report, int bus);

}  // namespace ccopf
