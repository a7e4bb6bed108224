#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fleetpricer/dates.hpp"

namespace fleetpricer {

using FeatureMap = std::map<std::string, std::string>;

/// Lattice of (pickup day i, ABT j, LOR k) with i in [0, N), j in [0, M),
/// k in [1, L]. Cells are stored row-major in that order.
struct GridDims {
  int pickup_days = 0;  // N
  int max_abt = 0;      // M
  int max_lor = 0;      // L

  void validate() const;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(pickup_days) * max_abt * max_lor;
  }
  std::size_t segment_count() const { return static_cast<std::size_t>(max_abt) * max_lor; }
  std::size_t cell(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * max_abt + j) * max_lor + (k - 1);
  }
  /// (j, k) index into per-segment arrays such as elasticities.
  std::size_t segment(int j, int k) const {
    return static_cast<std::size_t>(j) * max_lor + (k - 1);
  }

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct CellIndex {
  int pickup_day;
  int abt;
  int lor;
};

CellIndex decode_cell(const GridDims& dims, std::size_t flat);

/// Booking lattice with prices, costs, fleet and ground-truth elasticities.
/// Immutable once constructed; the constructor enforces every invariant.
class MarketGrid {
 public:
  MarketGrid(GridDims dims, std::vector<int> fleet, std::vector<double> price,
             std::vector<double> cost, std::vector<double> true_elasticity,
             double expected_utilization, Date first_pickup = Date{});

  const GridDims& dims() const { return dims_; }
  std::span<const int> fleet() const { return fleet_; }
  std::span<const double> price() const { return price_; }
  std::span<const double> cost() const { return cost_; }
  /// Per (j, k) segment, all strictly negative.
  std::span<const double> true_elasticity() const { return true_elasticity_; }
  double expected_utilization() const { return expected_utilization_; }
  /// Calendar date of pickup row i = 0.
  Date first_pickup() const { return first_pickup_; }

  double price(int i, int j, int k) const { return price_[dims_.cell(i, j, k)]; }
  double cost(int i, int j, int k) const { return cost_[dims_.cell(i, j, k)]; }
  double elasticity(int j, int k) const { return true_elasticity_[dims_.segment(j, k)]; }

 private:
  GridDims dims_;
  std::vector<int> fleet_;
  std::vector<double> price_;
  std::vector<double> cost_;
  std::vector<double> true_elasticity_;
  double expected_utilization_;
  Date first_pickup_;
};

struct BookingRecord {
  Date booking_date;
  Date pickup_date;
  int lor = 1;
  double offered_multiplier = 1.0;
  int offers = 0;
  int reservations = 0;
  double revenue_per_day = 0.0;
  std::string branch_type;
  std::string car_group;
  bool peak = false;

  int abt() const { return pickup_date - booking_date; }
  /// Grouping covariates: branch_type, car_group, peak_flag, lor, abt.
  FeatureMap covariates() const;
  void validate() const;

  friend bool operator==(const BookingRecord&, const BookingRecord&) = default;
};

struct HeuristicRule {
  FeatureMap conditions;  // all must match; empty matches everything
  double price = 0.0;

  bool matches(const FeatureMap& covariates) const;
};

struct HeuristicRuleSet {
  std::vector<HeuristicRule> rules;

  void validate() const;
};

/// Mean price of the rules whose predicates match. Throws NoMatchingRule.
double baseline_price(const HeuristicRuleSet& rules, const FeatureMap& covariates);

struct RandomizationConfig {
  double multiplier_low = 0.85;
  double multiplier_high = 1.15;
  double randomized_fraction = 1.0;
  double noise_sd = 0.05;
  std::uint64_t seed = 1;
  // Endogenous mode: non-randomized multipliers follow the observed booking
  // pace of each pickup date, and a per-pickup demand shock moves conversion.
  bool endogenous = false;
  double endogenous_gain = 0.5;
  double demand_shock_sd = 0.0;

  void validate() const;
};

/// Ground-truth elasticity drift over booking days (linear plus a cycle).
struct ElasticityDrift {
  double per_day = 0.0;
  double amplitude = 0.0;
  double period_days = 7.0;

  double offset(int day) const;
};

/// Everything the simulator needs beyond the grid: offer volumes,
/// conversion at baseline, covariate labels and drift.
struct MarketScenario {
  MarketGrid grid;
  std::vector<double> offer_rate;  // per cell, mean offers per booking day
  std::vector<double> base_cvr;    // per (j, k) segment, in (0, 1]
  std::string branch_type = "airport";
  std::string car_group = "economy";
  std::vector<bool> peak_row;  // per pickup row, empty = no peaks
  ElasticityDrift drift;
  Date epoch;  // first simulated booking day

  void validate() const;
  /// Grid row of a calendar pickup date (rows repeat with period N).
  int row_of(Date pickup) const;
  bool is_peak(Date pickup) const;
  double true_elasticity(Date booking, int j, int k) const;
};

/// Deterministic 64-bit seed mixing (splitmix64 over the inputs).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

struct CellOutcome {
  int offers = 0;
  int reservations = 0;
};

/// One (booking day, ABT, LOR) draw at the given multiplier. The random
/// stream depends only on (seed, booking, j, k), so different pricing
/// policies see common random numbers. noise_sd = 0 switches to the
/// expected-value path: offers = round(rate), reservations = round(offers*cvr).
CellOutcome simulate_cell(const MarketScenario& scenario, std::uint64_t seed, Date booking, int j,
                          int k, double multiplier, double noise_sd, double demand_shock = 0.0);

/// Booking history over booking days [epoch, epoch + horizon).
std::vector<BookingRecord> generate_history(const MarketScenario& scenario,
                                            const RandomizationConfig& rand, int horizon);

BookingRecord make_record(const MarketScenario& scenario, Date booking, int j, int k,
                          double multiplier, CellOutcome outcome);

/// Vehicles out on rent on `day`: pickup <= day < pickup + lor.
long on_rents(std::span<const BookingRecord> records, Date day);

/// Round to 6 decimals, the CSV precision for reals.
double quantize6(double v);

}  // namespace fleetpricer
