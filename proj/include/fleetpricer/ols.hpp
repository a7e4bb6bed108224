#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fleetpricer/market.hpp"

namespace fleetpricer {

struct RegressionResult {
  double intercept = 0.0;
  double slope = 0.0;  // the elasticity in a log-log fit
  double slope_se = 0.0;
  double slope_pvalue = 1.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::vector<double> residuals;  // input order
};

struct PricePoint {
  double multiplier = 1.0;
  double quantity = 0.0;
};

/// Simple linear regression y = a + b x with a two-sided t-test on b
/// (n - 2 degrees of freedom). A saturated fit (n = 2) reports
/// slope_se = 0 and p-value 1. Throws DegenerateDesign when x is constant.
RegressionResult fit_linear(std::span<const double> x, std::span<const double> y);

/// log(quantity) = b0 + b1 log(multiplier). Throws NonPositiveData when any
/// input is <= 0 and DegenerateDesign when all multipliers coincide.
RegressionResult fit_loglog(std::span<const PricePoint> pairs);

/// (multiplier, reservations / offers) for every record with at least one
/// reservation; zero-conversion rows have no logarithm and are dropped.
/// With bin_width > 0 records are pooled by multiplier bin first, so
/// zero-conversion rows still count toward their bin's offers.
std::vector<PricePoint> conversion_points(std::span<const BookingRecord> records,
                                          double bin_width = 0.0);

struct DiagnosticsReport {
  double breusch_pagan_pvalue = 1.0;
  double jarque_bera_pvalue = 1.0;
  bool passes_homoscedasticity = true;
  bool passes_normality = true;
  double significance_threshold = 0.05;
};

/// Koenker-Breusch-Pagan LM test (n R^2 of e^2 on the design, chi-square 1)
/// and Jarque-Bera (chi-square 2). Zero-variance residuals pass with p = 1.
/// Throws TooFewObservations below 8 points.
DiagnosticsReport diagnose(const RegressionResult& result, std::span<const double> design,
                           double significance_threshold = 0.05);

/// alpha * uncertainty - beta * margin; lower is better.
double score_grouping(double uncertainty, double margin, double alpha, double beta);

}  // namespace fleetpricer
