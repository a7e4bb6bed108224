#include "fleetpricer/tvc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "fleetpricer/error.hpp"
#include "fleetpricer/numfmt.hpp"
#include "fleetpricer/ols.hpp"

namespace fleetpricer {

namespace {

// Centered sufficient statistics of one period.
struct PeriodStats {
  std::size_t n = 0;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  double xbar = 0.0;
  double ybar = 0.0;
};

PeriodStats period_stats(const TvcPeriod& p) {
  PeriodStats s;
  s.n = p.design.size();
  if (s.n == 0) return s;
  for (std::size_t i = 0; i < s.n; ++i) {
    s.xbar += p.design[i];
    s.ybar += p.response[i];
  }
  s.xbar /= static_cast<double>(s.n);
  s.ybar /= static_cast<double>(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double dx = p.design[i] - s.xbar;
    const double dy = p.response[i] - s.ybar;
    s.sxx += dx * dx;
    s.sxy += dx * dy;
    s.syy += dy * dy;
  }
  // Design values that agree to rounding are treated as a constant design.
  if (s.sxx <= 1e-24 * std::max(1.0, s.xbar * s.xbar) * static_cast<double>(s.n)) s.sxx = 0.0;
  return s;
}

struct FilterResult {
  std::vector<double> mean;
  std::vector<double> var;
  double log_lik = 0.0;
};

FilterResult kalman_smooth(const std::vector<PeriodStats>& stats, double prior_mean,
                           double prior_var, double obs_sd, double state_sd) {
  const std::size_t T = stats.size();
  const double obs_var = obs_sd * obs_sd;
  const double q = state_sd * state_sd;
  const double log2pi = std::log(2.0 * std::numbers::pi);

  std::vector<double> m_pred(T), p_pred(T), m_filt(T), p_filt(T);
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    m_pred[t] = t == 0 ? prior_mean : m_filt[t - 1];
    p_pred[t] = t == 0 ? prior_var : p_filt[t - 1] + q;
    const auto& s = stats[t];
    m_filt[t] = m_pred[t];
    p_filt[t] = p_pred[t];
    if (s.n < 2) continue;
    const bool informative = s.sxx > 0.0;
    const double rss = informative ? std::max(0.0, s.syy - s.sxy * s.sxy / s.sxx) : s.syy;
    const double dof = static_cast<double>(s.n) - 1.0 - (informative ? 1.0 : 0.0);
    ll += -0.5 * dof * (log2pi + std::log(obs_var)) - rss / (2.0 * obs_var);
    if (!informative) continue;
    const double bhat = s.sxy / s.sxx;
    const double r = obs_var / s.sxx;
    const double f = p_pred[t] + r;
    const double innov = bhat - m_pred[t];
    ll += -0.5 * (log2pi + std::log(f) + innov * innov / f) - 0.5 * std::log(s.sxx);
    const double gain = p_pred[t] / f;
    m_filt[t] = m_pred[t] + gain * innov;
    p_filt[t] = (1.0 - gain) * p_pred[t];
  }

  FilterResult out;
  out.mean = m_filt;
  out.var = p_filt;
  out.log_lik = ll;
  for (std::size_t t = T - 1; t-- > 0;) {
    const double pp = p_pred[t + 1];
    const double c = pp > 0.0 ? p_filt[t] / pp : 1.0;
    out.mean[t] = m_filt[t] + c * (out.mean[t + 1] - m_pred[t + 1]);
    out.var[t] = std::max(0.0, p_filt[t] + c * c * (out.var[t + 1] - pp));
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = std::sqrt(lo * hi);
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  return g;
}

}  // namespace

void TvcSeries::validate() const {
  if (periods.size() < 2) throw Error(ErrorCode::InvalidArgument, "TVC series needs T >= 2");
  for (std::size_t t = 0; t < periods.size(); ++t) {
    if (periods[t].design.size() != periods[t].response.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "period " + std::to_string(t + 1) + ": design/response length mismatch");
    }
  }
}

TvcSeries tvc_series_from_records(std::span<const BookingRecord> records, Date epoch,
                                  int period_days, double bin_width) {
  if (period_days < 1) throw Error(ErrorCode::InvalidArgument, "period_days must be >= 1");
  struct Acc {
    std::vector<BookingRecord> rows;
    double revenue = 0.0;
    double rental_days = 0.0;
  };
  std::map<int, Acc> by_period;
  for (const auto& r : records) {
    const int offset = r.booking_date - epoch;
    if (offset < 0) continue;
    auto& acc = by_period[offset / period_days];
    const double days = static_cast<double>(r.reservations) * r.lor;
    acc.revenue += days * r.revenue_per_day;
    acc.rental_days += days;
    acc.rows.push_back(r);
  }
  TvcSeries series;
  if (by_period.empty()) return series;
  const int last = by_period.rbegin()->first;
  series.periods.resize(static_cast<std::size_t>(last) + 1);
  for (auto& [idx, acc] : by_period) {
    TvcPeriod& period = series.periods[static_cast<std::size_t>(idx)];
    for (const auto& pt : conversion_points(acc.rows, bin_width)) {
      period.design.push_back(std::log(pt.multiplier));
      period.response.push_back(std::log(pt.quantity));
    }
    period.rpd = acc.rental_days > 0.0 ? acc.revenue / acc.rental_days : 0.0;
  }
  return series;
}

std::vector<std::optional<Elasticity>> per_period_slopes(const TvcSeries& series) {
  std::vector<std::optional<Elasticity>> out;
  out.reserve(series.periods.size());
  for (const auto& p : series.periods) {
    try {
      const RegressionResult r = fit_linear(p.design, p.response);
      out.push_back(Elasticity{r.slope, r.slope_se});
    } catch (const Error&) {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

TvcPosterior fit_tvc(const TvcSeries& series, const TvcOptions& options) {
  series.validate();
  if (options.prior_sd <= 0.0) throw Error(ErrorCode::InvalidArgument, "prior_sd must be > 0");
  if (options.grid_points < 1) throw Error(ErrorCode::InvalidArgument, "grid_points must be >= 1");
  if (options.obs_sd && !(*options.obs_sd > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "obs_sd must be > 0");
  }
  if (options.state_sd && !(*options.state_sd >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "state_sd must be >= 0");
  }

  std::vector<PeriodStats> stats;
  stats.reserve(series.periods.size());
  double sxx_total = 0.0, sxy_total = 0.0, syy_total = 0.0;
  std::size_t dof_total = 0;
  for (const auto& p : series.periods) {
    stats.push_back(period_stats(p));
    const auto& s = stats.back();
    sxx_total += s.sxx;
    sxy_total += s.sxy;
    syy_total += s.syy;
    if (s.n >= 1) dof_total += s.n - 1;
  }
  if (sxx_total <= 0.0) {
    throw Error(ErrorCode::SingularInput, "design values never vary within any period");
  }

  // Scale of the within-period pooled residual, used to centre the obs grid.
  const double pooled_rss = std::max(0.0, syy_total - sxy_total * sxy_total / sxx_total);
  const double pooled_sd =
      dof_total > 1 ? std::sqrt(pooled_rss / static_cast<double>(dof_total - 1)) : 0.0;
  const double obs_center = pooled_sd > 1e-12 ? pooled_sd : 1e-6;

  const std::vector<double> obs_grid =
      options.obs_sd ? std::vector<double>{*options.obs_sd}
                     : log_grid(obs_center / 10.0, obs_center * 10.0, options.grid_points);
  const std::vector<double> state_grid =
      options.state_sd ? std::vector<double>{*options.state_sd}
                       : log_grid(1e-4, 1.0, options.grid_points);

  const double prior_var = options.prior_sd * options.prior_sd;
  FilterResult best;
  double best_obs = obs_grid.front();
  double best_state = state_grid.front();
  best.log_lik = -std::numeric_limits<double>::infinity();
  for (double o : obs_grid) {
    for (double s : state_grid) {
      FilterResult r = kalman_smooth(stats, options.prior_mean, prior_var, o, s);
      if (r.log_lik > best.log_lik || best.mean.empty()) {
        best = std::move(r);
        best_obs = o;
        best_state = s;
      }
    }
  }

  TvcPosterior post;
  post.beta_mean = std::move(best.mean);
  post.beta_var = std::move(best.var);
  post.obs_sd = best_obs;
  post.state_sd = best_state;
  post.prior_mean = options.prior_mean;
  post.log_marginal_likelihood = best.log_lik;
  double alpha_sum = 0.0;
  std::size_t alpha_n = 0;
  for (std::size_t t = 0; t < stats.size(); ++t) {
    if (stats[t].n == 0) continue;
    alpha_sum += static_cast<double>(stats[t].n) * (stats[t].ybar - post.beta_mean[t] * stats[t].xbar);
    alpha_n += stats[t].n;
  }
  post.alpha = alpha_n > 0 ? alpha_sum / static_cast<double>(alpha_n) : 0.0;
  return post;
}

namespace {

struct Basis {
  const ForecastConfig& cfg;
  bool has_holiday;

  std::size_t size() const {
    return 2 + 2 * static_cast<std::size_t>(cfg.seasonal_order) + (has_holiday ? 1 : 0) +
           (cfg.use_regressor ? 1 : 0);
  }
  bool is_holiday(double t) const {
    return std::any_of(cfg.holidays.begin(), cfg.holidays.end(),
                       [t](double h) { return std::abs(h - t) < 1e-9; });
  }
  Eigen::RowVectorXd row(double t, double rpd) const {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(size()));
    Eigen::Index c = 0;
    out(c++) = 1.0;
    out(c++) = t;
    for (int m = 1; m <= cfg.seasonal_order; ++m) {
      const double w = 2.0 * std::numbers::pi * m * t / cfg.seasonal_period;
      out(c++) = std::sin(w);
      out(c++) = std::cos(w);
    }
    if (has_holiday) out(c++) = is_holiday(t) ? 1.0 : 0.0;
    if (cfg.use_regressor) out(c++) = rpd;
    return out;
  }
};

}  // namespace

ElasticityForecast forecast_elasticity(std::span<const SlopeObservation> history,
                                       std::span<const double> history_rpd,
                                       std::span<const double> future_rpd, int horizon,
                                       const ForecastConfig& config) {
  if (config.seasonal_order < 0) throw Error(ErrorCode::InvalidArgument, "seasonal_order must be >= 0");
  if (config.seasonal_order > 0 && !(config.seasonal_period > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "seasonal_period must be > 0");
  }
  if (config.ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  if (horizon < 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 0");
  const Basis basis{config, !config.holidays.empty()};
  const std::size_t p = basis.size();
  const std::size_t n = history.size();
  if (n < 2 * p) {
    throw Error(ErrorCode::InsufficientHistory, "history of " + std::to_string(n) +
                                                    " periods, basis needs " +
                                                    std::to_string(2 * p));
  }
  if (config.use_regressor) {
    if (history_rpd.size() != n) {
      throw Error(ErrorCode::InvalidArgument, "history rpd length must match history");
    }
    if (future_rpd.size() < static_cast<std::size_t>(horizon)) {
      throw Error(ErrorCode::MissingFutureRegressor,
                  "future rpd covers " + std::to_string(future_rpd.size()) + " of " +
                      std::to_string(horizon) + " periods");
    }
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    X.row(static_cast<Eigen::Index>(r)) =
        basis.row(history[r].t, config.use_regressor ? history_rpd[r] : 0.0);
    y(static_cast<Eigen::Index>(r)) = history[r].beta;
  }
  // Column scaling keeps the ridge comparable across basis functions.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  for (Eigen::Index c = 1; c < X.cols(); ++c) {
    const double m = X.col(c).cwiseAbs().maxCoeff();
    if (m > 0.0) scale(c) = m;
  }
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  const Eigen::Index penalized = static_cast<Eigen::Index>(p) - 1;
  Eigen::MatrixXd A(Xs.rows() + penalized, Xs.cols());
  A.topRows(Xs.rows()) = Xs;
  A.bottomRows(penalized).setZero();
  const double root_ridge = std::sqrt(config.ridge);
  for (Eigen::Index c = 0; c < penalized; ++c) A(Xs.rows() + c, c + 1) = root_ridge;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
  b.head(y.size()) = y;
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b).cwiseQuotient(scale);

  const Eigen::VectorXd resid = y - X * coef;
  ElasticityForecast f;
  f.resid_sd = n > p ? std::sqrt(resid.squaredNorm() / static_cast<double>(n - p)) : 0.0;
  f.trend_slope = coef(1);
  f.regressor_coef = config.use_regressor ? coef(static_cast<Eigen::Index>(p) - 1) : 0.0;

  double t_last = history.back().t;
  for (const auto& h : history) t_last = std::max(t_last, h.t);
  for (int h = 0; h < horizon; ++h) {
    const double t = t_last + 1.0 + h;
    const double rpd = config.use_regressor ? future_rpd[static_cast<std::size_t>(h)] : 0.0;
    const Eigen::RowVectorXd row = basis.row(t, rpd);
    const double trend = coef(0) + coef(1) * t;
    double seasonal = 0.0;
    Eigen::Index c = 2;
    for (int m = 0; m < config.seasonal_order; ++m, c += 2) {
      seasonal += coef(c) * row(c) + coef(c + 1) * row(c + 1);
    }
    double holiday = 0.0;
    if (basis.has_holiday) holiday = coef(c) * row(c), ++c;
    const double reg = config.use_regressor ? coef(c) * row(c) : 0.0;
    f.periods.push_back(t);
    f.trend.push_back(trend);
    f.seasonal.push_back(seasonal);
    f.holiday.push_back(holiday);
    f.regressor_effect.push_back(reg);
    f.point.push_back(trend + seasonal + holiday + reg);
  }
  return f;
}

CvReport rolling_cv(std::span<const double> betas, std::span<const double> rpd, int initial_train,
                    int step, int horizon, const ForecastConfig& config) {
  if (initial_train < 1 || step < 1 || horizon < 1) {
    throw Error(ErrorCode::InvalidArgument, "initial_train, step and horizon must be >= 1");
  }
  if (config.use_regressor && rpd.size() != betas.size()) {
    throw Error(ErrorCode::InvalidArgument, "rpd length must match the slope series");
  }
  const int n = static_cast<int>(betas.size());
  if (n < initial_train + horizon) {
    throw Error(ErrorCode::InsufficientHistory,
                "series of " + std::to_string(n) + " periods is shorter than initial_train + horizon");
  }

  CvReport report;
  double se_model = 0.0, se_naive = 0.0, se_static = 0.0;
  std::size_t points = 0;
  for (int origin = initial_train; origin + horizon <= n; origin += step) {
    std::vector<SlopeObservation> hist(static_cast<std::size_t>(origin));
    double mean = 0.0;
    for (int t = 0; t < origin; ++t) {
      hist[static_cast<std::size_t>(t)] = {static_cast<double>(t + 1), betas[static_cast<std::size_t>(t)]};
      mean += betas[static_cast<std::size_t>(t)];
    }
    mean /= origin;
    const auto hist_rpd = config.use_regressor ? rpd.subspan(0, static_cast<std::size_t>(origin))
                                               : std::span<const double>{};
    const auto fut_rpd = config.use_regressor
                             ? rpd.subspan(static_cast<std::size_t>(origin), static_cast<std::size_t>(horizon))
                             : std::span<const double>{};
    const ElasticityForecast fc = forecast_elasticity(hist, hist_rpd, fut_rpd, horizon, config);
    const double last = betas[static_cast<std::size_t>(origin - 1)];
    double fm = 0.0, fn = 0.0, fs = 0.0;
    for (int h = 0; h < horizon; ++h) {
      const double actual = betas[static_cast<std::size_t>(origin + h)];
      const double em = fc.point[static_cast<std::size_t>(h)] - actual;
      const double en = last - actual;
      const double es = mean - actual;
      fm += em * em;
      fn += en * en;
      fs += es * es;
    }
    report.folds.push_back({origin, std::sqrt(fm / horizon), std::sqrt(fn / horizon),
                            std::sqrt(fs / horizon)});
    se_model += fm;
    se_naive += fn;
    se_static += fs;
    points += static_cast<std::size_t>(horizon);
  }
  const double denom = static_cast<double>(points);
  report.rmse_model = std::sqrt(se_model / denom);
  report.rmse_naive_t1 = std::sqrt(se_naive / denom);
  report.rmse_static_mean = std::sqrt(se_static / denom);
  return report;
}

nlohmann::json cv_report_to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"train_end", f.train_end},
                     {"rmse_model", sig9(f.rmse_model)},
                     {"rmse_naive_t1", sig9(f.rmse_naive_t1)},
                     {"rmse_static_mean", sig9(f.rmse_static_mean)}});
  }
  return {{"folds", folds},
          {"rmse_model", sig9(report.rmse_model)},
          {"rmse_naive_t1", sig9(report.rmse_naive_t1)},
          {"rmse_static_mean", sig9(report.rmse_static_mean)}};
}

}  // namespace fleetpricer
