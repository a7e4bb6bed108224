#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetpricer/config.hpp"
#include "fleetpricer/forecast.hpp"
#include "fleetpricer/grouping.hpp"
#include "fleetpricer/market.hpp"
#include "fleetpricer/pricing.hpp"
#include "fleetpricer/tvc.hpp"
#include "json.hpp"

namespace fleetpricer {

/// Elasticity tree plus the TVC estimate used for cells that only resolve
/// to the root.
struct ElasticityModel {
  GroupingNode tree;
  std::optional<TvcPosterior> tvc;
  std::optional<Elasticity> tvc_current;  // last smoothed period
};

/// Records booked before `as_of` only. TVC needs estimation.tvc_min_periods
/// complete periods; otherwise the root estimate stands alone.
ElasticityModel fit_elasticity_model(const RunConfig& c, std::span<const BookingRecord> records,
                                     Date epoch, Date as_of);

/// Per (j, k) elasticity resolved for a non-peak pickup.
std::vector<double> segment_elasticities(const ElasticityModel& m, const RunConfig& c,
                                         const MarketScenario& s);

/// Scenario rows re-indexed so row 0 is `first_pickup`.
MarketGrid window_grid(const MarketScenario& s, Date first_pickup);

/// On-rents per window day from pickups before `first_pickup`.
std::vector<double> window_carryover(std::span<const BookingRecord> records, Date first_pickup,
                                     int days);

PricingProblem build_window_problem(const RunConfig& c, const MarketScenario& s,
                                    std::span<const BookingRecord> records, Date as_of,
                                    const ElasticityModel& model);

/// Records to start from: the input CSV or a simulated history.
std::vector<BookingRecord> initial_records(const RunConfig& c, const MarketScenario& s);

/// First booking day after the records.
Date next_booking_day(const RunConfig& c, std::span<const BookingRecord> records);

struct DayLog {
  int day = 0;
  Date date;
  std::string status;
  bool fallback = false;
  SolverReport report;
  double expected_margin = 0.0;
  double realized_margin = 0.0;
  double heuristic_margin = 0.0;
  long reservations = 0;
  long heuristic_reservations = 0;
};

struct BatchState {
  int day = 0;
  Date start;
  std::vector<BookingRecord> records;
  ElasticityModel model;
  std::optional<DemandForecast> forecast;
  std::optional<PricingProblem> problem;
  std::optional<PricingPolicy> policy;
  std::vector<DayLog> history;
  std::vector<std::string> events;

  double cumulative_margin() const;
  double cumulative_heuristic_margin() const;
};

BatchState start_batch(const RunConfig& c, const MarketScenario& s);

/// One day: re-fit, re-forecast, solve, apply today's cells, simulate.
/// Infeasible days fall back to the heuristic multiplier and log an event.
void step_batch(BatchState& state, const RunConfig& c, const MarketScenario& s);

BatchState run_batch(const RunConfig& c);

std::vector<BookingRecord> ingest(const std::filesystem::path& path);

nlohmann::json batch_to_json(const BatchState& state, const RunConfig& c);

/// records.csv, forecast.csv, policy.csv, benchmark.csv, report.svg, run.json.
void export_batch(const BatchState& state, const RunConfig& c, const std::filesystem::path& dir);

}  // namespace fleetpricer
