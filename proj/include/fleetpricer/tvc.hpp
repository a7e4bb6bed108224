#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fleetpricer/dates.hpp"
#include "fleetpricer/grouping.hpp"
#include "fleetpricer/market.hpp"

namespace fleetpricer {

struct TvcPeriod {
  std::vector<double> design;    // log offer multipliers
  std::vector<double> response;  // log quantities
  double rpd = 0.0;              // revenue per rental day
};

/// Period-indexed regression data, t = 1..T in vector order.
struct TvcSeries {
  std::vector<TvcPeriod> periods;

  void validate() const;
};

/// Groups records by booking period of `period_days` starting at `epoch`;
/// response is log conversion (reservations / offers), optionally pooled
/// by multiplier bin as in conversion_points.
TvcSeries tvc_series_from_records(std::span<const BookingRecord> records, Date epoch,
                                  int period_days, double bin_width = 0.0);

/// Independent log-log OLS per period; degenerate periods are absent.
std::vector<std::optional<Elasticity>> per_period_slopes(const TvcSeries& series);

struct TvcPosterior {
  double alpha = 0.0;  // pooled intercept implied by the smoothed path
  std::vector<double> beta_mean;
  std::vector<double> beta_var;
  double obs_sd = 0.0;
  double state_sd = 0.0;
  double prior_mean = 0.0;
  double log_marginal_likelihood = 0.0;
};

struct TvcOptions {
  double prior_mean = -1.0;
  std::optional<double> state_sd;  // nullopt = marginal-likelihood grid
  std::optional<double> obs_sd;    // nullopt = marginal-likelihood grid
  double prior_sd = 10.0;          // sd of beta_1 around prior_mean
  int grid_points = 16;
};

/// Exact Gaussian posterior of beta_1..T for
///   y_tn = alpha_t + beta_t x_tn + e,  e ~ N(0, obs_sd^2)
///   beta_t = beta_{t-1} + eta_t,       eta ~ N(0, state_sd^2)
/// with per-period intercepts profiled out by centering; Kalman filter plus
/// Rauch-Tung-Striebel smoother. Throws SingularInput when the design never
/// varies within any period.
TvcPosterior fit_tvc(const TvcSeries& series, const TvcOptions& options);

struct ForecastConfig {
  int seasonal_order = 3;
  double seasonal_period = 12.0;
  std::vector<double> holidays;  // period indices flagged as holidays
  bool use_regressor = true;
  double ridge = 1e-6;  // on max-abs-scaled columns, intercept excluded
};

struct ElasticityForecast {
  std::vector<double> periods;
  std::vector<double> point;
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> holiday;
  std::vector<double> regressor_effect;
  double resid_sd = 0.0;
  double regressor_coef = 0.0;
  double trend_slope = 0.0;
};

struct SlopeObservation {
  double t = 0.0;
  double beta = 0.0;
};

/// Least squares of beta on [1, t, Fourier pairs, holiday indicator, rpd]
/// extended over `horizon` unit steps after the last history period.
/// Throws InsufficientHistory when history < 2 * basis size and
/// MissingFutureRegressor when future_rpd is shorter than the horizon.
ElasticityForecast forecast_elasticity(std::span<const SlopeObservation> history,
                                       std::span<const double> history_rpd,
                                       std::span<const double> future_rpd, int horizon,
                                       const ForecastConfig& config);

struct CvFold {
  int train_end = 0;
  double rmse_model = 0.0;
  double rmse_naive_t1 = 0.0;
  double rmse_static_mean = 0.0;
};

struct CvReport {
  std::vector<CvFold> folds;
  double rmse_model = 0.0;
  double rmse_naive_t1 = 0.0;
  double rmse_static_mean = 0.0;
};

/// Rolling-origin evaluation: origins initial_train, +step, ... while the
/// horizon still fits; each fold compares forecast_elasticity with the
/// training mean and the last training value. RMSEs pool all fold points.
CvReport rolling_cv(std::span<const double> betas, std::span<const double> rpd, int initial_train,
                    int step, int horizon, const ForecastConfig& config);

nlohmann::json cv_report_to_json(const CvReport& report);

}  // namespace fleetpricer
