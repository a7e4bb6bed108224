#pragma once

// Special functions behind the regression p-values.

namespace fleetpricer::stats {

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// Regularized upper incomplete gamma Q(a, x).
double incomplete_gamma_upper(double a, double x);

double student_t_cdf(double t, double dof);

/// P(|T| >= |t|) for T ~ Student-t(dof).
double student_t_two_sided_pvalue(double t, double dof);

/// P(X >= x) for X ~ chi-square(dof).
double chi_square_sf(double x, double dof);

/// Exact standard normal CDF via erfc.
double normal_cdf(double z);

}  // namespace fleetpricer::stats
