#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fleetpricer/pricing.hpp"
#include "json.hpp"

namespace fleetpricer {

struct RiskDecision {
  double sigma_bf = 0.0;  // booking-forecast sd
  double sigma_e = 0.0;   // elasticity sd
};

struct RiskContribution {
  double sigma_bf = 0.0;
  double sigma_e = 0.0;
  double contribution = 0.0;
};

struct RiskAggregate {
  std::vector<RiskContribution> per_decision;
  double total = 0.0;
};

/// Sum over decisions of sqrt(sigma_bf^2 + sigma_e^2). With `normalize`,
/// each sigma column is first divided by its root mean square so the two
/// units contribute comparably.
RiskAggregate aggregate_risk(std::span<const RiskDecision> decisions, bool normalize = false);

struct Choice {
  std::string label;
  double value = 0.0;
};

/// max value minus each value; the best choice maps to exactly 0.
std::vector<double> opportunity_cost(std::span<const Choice> choices);

struct FleetCounterfactual {
  double constrained_margin = 0.0;    // P_c
  double unconstrained_margin = 0.0;  // P_u
  double n_constrained = 0.0;         // peak fleet in the window
  double n_optimal = 0.0;             // peak on-rents of the unconstrained policy
  double delta_n = 0.0;
  double oc_per_vehicle = 0.0;
  bool zero_delta_n = false;
  std::vector<double> constrained_multipliers;
  std::vector<double> unconstrained_multipliers;
};

/// Solves with and without the utilization and chance rows and prices the
/// fleet constraint per vehicle. Margins are solver objectives.
FleetCounterfactual fleet_opportunity_cost(const PricingProblem& p, const SolveOptions& o = {});

struct MonteCarloResult {
  std::uint64_t samples = 0;
  double margin_mean = 0.0;
  double margin_sd = 0.0;
  std::vector<double> violation_frequency;  // u < c or u > 100, per day
  std::vector<double> upper_frequency;      // u > 100
  std::vector<double> lower_frequency;      // u < c
  std::vector<double> utilization_mean;
  std::vector<double> utilization_var;
};

struct MonteCarloOptions {
  std::uint64_t block_size = 4096;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Draws D ~ N(mean, sd^2) truncated at 0 and elasticity ~ N(mean, sd^2)
/// per cell, evaluates margin and utilization per draw. Blocks use derived
/// seeds and merge in block order, so results do not depend on threads.
MonteCarloResult monte_carlo_eval(const PricingProblem& p, std::span<const double> multipliers,
                                  std::uint64_t samples, std::uint64_t seed,
                                  const MonteCarloOptions& options = {});

struct BenchmarkRow {
  std::string label;
  double expected_margin = 0.0;
  double objective = 0.0;
  double risk_total = 0.0;  // sum of sigma norms over repriced cells
  double mean_day_risk = 0.0;
  int band_violations = 0;
  double opportunity_cost = 0.0;
};

std::vector<BenchmarkRow> benchmark(const PricingProblem& p,
                                    std::span<const std::pair<std::string, std::vector<double>>> policies);

nlohmann::json fleet_counterfactual_to_json(const FleetCounterfactual& f);
nlohmann::json monte_carlo_to_json(const MonteCarloResult& r);

}  // namespace fleetpricer
