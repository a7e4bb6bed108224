#include <algorithm>
#include <cmath>

#include "fleetpricer/kernels.hpp"

namespace fleetpricer::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void clamp_scalar(const double* v, const double* lo, const double* hi, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::min(std::max(v[i], lo[i]), hi[i]);
}

double max_abs_scalar(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void demand_weights_scalar(const double* e, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 - e[i] * (1.0 - x[i]);
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double weighted_sq_sum_scalar(const double* w, const double* s, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = w[i] * s[i];
    acc += p * p;
  }
  return acc;
}

void admm_project_scalar(const double* zt, double* z, double* y, const double* rho,
                         const double* lo, const double* hi, double alpha, std::size_t n) {
  const double beta = 1.0 - alpha;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = alpha * zt[i] + beta * z[i];
    const double zn = std::min(std::max(v + y[i] / rho[i], lo[i]), hi[i]);
    y[i] += rho[i] * (v - zn);
    z[i] = zn;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",         dot_scalar,         axpy_scalar,
      clamp_scalar,     max_abs_scalar,     max_abs_diff_scalar,
      demand_weights_scalar, mul_scalar,    weighted_sq_sum_scalar,
      admm_project_scalar,
  };
  return table;
}

}  // namespace fleetpricer::kernels
