#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fleetpricer/dates.hpp"
#include "fleetpricer/market.hpp"

namespace fleetpricer {

/// Booking curve of one (pickup date, LOR) pair. Index j is days before
/// pickup; cumulative[j] counts offers made j or more days ahead, so it is
/// non-decreasing as j falls to 0. Only j >= observed_to is known.
struct BookingCurve {
  Date pickup_date;
  int lor = 1;
  std::vector<double> cumulative;
  std::vector<double> reservations;  // per-ABT realized reservations
  int observed_to = 0;

  double increment(int j) const;
};

/// Per-cell baseline-price demand (reservations) on a grid window.
struct DemandForecast {
  GridDims dims;
  Date first_pickup;
  Date as_of;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> offers;
  /// Cells already booked before as_of; their mean is the observation.
  std::vector<std::uint8_t> realized;
  int clipped_increments = 0;

  void validate() const;
};

enum class ForecasterKind { pickup_additive, pickup_multiplicative, seasonal_naive };

ForecasterKind parse_forecaster_kind(const std::string& name);
std::string to_string(ForecasterKind kind);

struct ForecasterSpec {
  ForecasterKind kind = ForecasterKind::pickup_additive;
  int window = 28;
  /// cycle: pickup-date period of the cell classes (default 7);
  /// min_class_curves: curves a class needs before it is used (default 2).
  std::map<std::string, double> options;

  void validate() const;
  int cycle() const;
  int min_class_curves() const;
};

class Forecaster {
 public:
  const ForecasterSpec& spec() const { return spec_; }
  int max_abt() const { return max_abt_; }
  int max_lor() const { return max_lor_; }
  /// Baseline conversion per (j, k) segment.
  double base_cvr(int j, int k) const;
  /// Residual sd of one ABT step, in offers.
  double step_sd(int j) const;
  /// Expected offers booked at ABT j for (pickup, lor), given the cumulative
  /// count already booked further ahead.
  double predict_increment(Date pickup, int lor, int j, double cum_after) const;

 private:
  friend Forecaster fit_forecaster(std::span<const BookingRecord>, const ForecasterSpec&,
                                   std::span<const double>);

  struct Profile {
    std::vector<double> inc_sum, ratio_sum;
    std::vector<int> inc_n, ratio_n;
    int curves = 0;
  };
  struct Curve {
    std::vector<double> offers;
    std::vector<bool> seen;
  };
  using ClassKey = std::pair<int, int>;  // (lor or 0, phase or -1)

  const Profile* resolve(Date pickup, int lor) const;
  std::optional<double> seasonal_lookup(Date pickup, int lor, int j) const;
  double additive_mean(const Profile& p, int j) const;

  ForecasterSpec spec_;
  int max_abt_ = 0;
  int max_lor_ = 0;
  std::vector<double> base_cvr_;
  std::vector<double> step_sd_;
  std::map<ClassKey, Profile> profiles_;
  std::map<std::pair<std::int32_t, int>, Curve> curves_;
};

/// Learns the increment (additive) or ratio (multiplicative) booking-curve
/// profile by ABT and cell class from the last `window` complete pickup
/// dates, plus leave-one-out residual sd per ABT. `segment_elasticity`
/// (per (j, k), optional) de-prices the conversion estimate.
/// Throws InsufficientHistory.
Forecaster fit_forecaster(std::span<const BookingRecord> history, const ForecasterSpec& spec,
                          std::span<const double> segment_elasticity = {});

/// Curves of the pickups in the grid window as seen on `as_of`.
std::vector<BookingCurve> open_curves_from_records(std::span<const BookingRecord> records,
                                                   const MarketGrid& grid, Date as_of);

/// Forecast on the grid window. Cells with j > pickup - as_of are realized.
/// Throws UnknownPickupDate for curves outside the window.
DemandForecast forecast(const Forecaster& f, std::span<const BookingCurve> open_curves,
                        const MarketGrid& grid, Date as_of);

/// Cumulative curve after forecasting every unobserved step down to ABT 0.
std::vector<double> project_cumulative(const Forecaster& f, const BookingCurve& curve);

/// offers * base_cvr * (1 - elasticity (1 - multiplier)), floored at 0.
double expected_reservations(double offers, double base_cvr, double elasticity, double multiplier);

/// pickup_day,abt,lor,mean,sd
void write_forecast_csv(std::ostream& os, const DemandForecast& f);

}  // namespace fleetpricer
