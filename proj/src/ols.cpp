#include "fleetpricer/ols.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fleetpricer/error.hpp"
#include "fleetpricer/stats.hpp"

namespace fleetpricer {

RegressionResult fit_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::DegenerateDesign, "need at least two observations");

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateDesign, "all design values are equal");

  RegressionResult r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.residuals.resize(n);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.residuals[i] = y[i] - (r.intercept + r.slope * x[i]);
    rss += r.residuals[i] * r.residuals[i];
  }
  r.r_squared = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;

  if (n == 2) {
    r.slope_se = 0.0;
    r.slope_pvalue = 1.0;
    return r;
  }
  const double dof = static_cast<double>(n - 2);
  r.slope_se = std::sqrt(rss / dof / sxx);
  if (r.slope_se == 0.0) {
    r.slope_pvalue = r.slope == 0.0 ? 1.0 : 0.0;
  } else {
    r.slope_pvalue = stats::student_t_two_sided_pvalue(r.slope / r.slope_se, dof);
  }
  return r;
}

RegressionResult fit_loglog(std::span<const PricePoint> pairs) {
  std::vector<double> lx(pairs.size());
  std::vector<double> ly(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(pairs[i].multiplier > 0.0) || !(pairs[i].quantity > 0.0)) {
      throw Error(ErrorCode::NonPositiveData, "log-log fit needs positive multipliers and quantities");
    }
    lx[i] = std::log(pairs[i].multiplier);
    ly[i] = std::log(pairs[i].quantity);
  }
  return fit_linear(lx, ly);
}

std::vector<PricePoint> conversion_points(std::span<const BookingRecord> records,
                                          double bin_width) {
  std::vector<PricePoint> out;
  if (bin_width > 0.0) {
    struct Bin {
      double offers = 0.0, reservations = 0.0, weighted_x = 0.0;
    };
    std::map<long long, Bin> bins;
    for (const auto& r : records) {
      if (r.offers <= 0) continue;
      auto& b = bins[std::llround(r.offered_multiplier / bin_width)];
      b.offers += r.offers;
      b.reservations += r.reservations;
      b.weighted_x += r.offers * r.offered_multiplier;
    }
    for (const auto& [key, b] : bins) {
      if (b.reservations > 0.0) out.push_back({b.weighted_x / b.offers, b.reservations / b.offers});
    }
    return out;
  }
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.reservations > 0 && r.offers > 0) {
      out.push_back({r.offered_multiplier, static_cast<double>(r.reservations) / r.offers});
    }
  }
  return out;
}

DiagnosticsReport diagnose(const RegressionResult& result, std::span<const double> design,
                           double significance_threshold) {
  const auto& e = result.residuals;
  if (e.size() != design.size()) {
    throw Error(ErrorCode::InvalidArgument, "residual and design lengths differ");
  }
  const std::size_t n = e.size();
  if (n < 8) throw Error(ErrorCode::TooFewObservations, "diagnostics need at least 8 points");

  DiagnosticsReport rep;
  rep.significance_threshold = significance_threshold;

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = e[i] * e[i];
  try {
    const RegressionResult aux = fit_linear(design, sq);
    const bool flat = std::all_of(sq.begin(), sq.end(), [&](double v) { return v == sq[0]; });
    if (!flat) {
      rep.breusch_pagan_pvalue = stats::chi_square_sf(static_cast<double>(n) * aux.r_squared, 1.0);
    }
  } catch (const Error&) {
    // constant design: no variance to explain
  }

  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : e) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 > 0.0) {
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    const double jb = static_cast<double>(n) / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    rep.jarque_bera_pvalue = stats::chi_square_sf(jb, 2.0);
  }

  rep.passes_homoscedasticity = rep.breusch_pagan_pvalue > significance_threshold;
  rep.passes_normality = rep.jarque_bera_pvalue > significance_threshold;
  return rep;
}

double score_grouping(double uncertainty, double margin, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "grouping weights must be non-negative");
  }
  return alpha * uncertainty - beta * margin;
}

}  // namespace fleetpricer
