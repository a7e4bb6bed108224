#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fleetpricer/forecast.hpp"
#include "fleetpricer/grouping.hpp"
#include "fleetpricer/market.hpp"
#include "fleetpricer/pricing.hpp"
#include "fleetpricer/tvc.hpp"
#include "json.hpp"

namespace fleetpricer {

/// Synthetic market the simulator runs on. Offer volume per cell is
/// offer_rate scaled by an ABT decay, a short-LOR tilt and peak_boost on
/// peak rows; elasticity per (j, k) interpolates elasticity_max (short ABT,
/// LOR 1) to elasticity_min (long ABT, long LOR).
struct ScenarioConfig {
  GridDims dims{14, 14, 7};
  Date epoch{};  // 1970-01-01 unless configured
  int fleet = 380;
  double expected_utilization = 70.0;
  double elasticity_min = -2.5;
  double elasticity_max = -0.8;
  double cost_ratio = 0.4;
  double offer_rate = 3.0;
  double base_cvr = 0.3;
  std::vector<int> peak_rows{5, 6};
  double peak_boost = 1.3;
  std::string branch_type = "airport";
  std::string car_group = "economy";
  ElasticityDrift drift;
  HeuristicRuleSet rules;  // daily rates; cell price = rate * LOR
};

struct EstimationConfig {
  GroupingConfig grouping;  // features built from the edges below
  std::vector<int> lor_edges{1, 3, 6};
  std::vector<int> abt_edges{0, 3, 7};
  /// Estimated slopes are capped here so the objective stays concave.
  double max_elasticity = -0.05;
  bool tvc = true;
  int tvc_period_days = 7;
  int tvc_min_periods = 6;
  ForecastConfig elasticity_forecast;
  int cv_initial_train = 6;
  int cv_step = 1;
  int cv_horizon = 1;
};

struct OptimizerConfig {
  double box_lo = 0.85;
  double box_hi = 1.15;
  double band_a = 0.5;
  double band_b = 1.25;
  bool utilization_constraints = true;
  RiskParams risk;
  CostMode cost_mode = CostMode::per_booking;
  IndexSet index_set = IndexSet::full_abt;
  VarianceMode variance_mode = VarianceMode::statistical;
  SolveOptions solve;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  /// Records CSV to start from; empty = simulate history_days of it.
  std::filesystem::path input_records;
  ScenarioConfig scenario;
  RandomizationConfig randomization;
  int history_days = 90;
  ForecasterSpec forecaster;
  EstimationConfig estimation;
  OptimizerConfig optimizer;
  int batch_days = 30;
  int monte_carlo_samples = 100000;

  /// Field-level checks; throws ConfigError naming the field.
  void validate() const;
};

RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& c);

/// Reads a config object layered over the defaults. Unknown fields and
/// type mismatches throw ConfigError with the dotted field path.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies one `a.b.c=value` override in place; the value is parsed as JSON
/// and taken as a plain string when that fails.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// File, then overrides in order, then validation.
RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides);

MarketScenario make_scenario(const RunConfig& c);

}  // namespace fleetpricer
