#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "fleetpricer/kernels.hpp"

namespace fleetpricer::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void clamp_neon(const double* v, const double* lo, const double* hi, double* out,
                std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t c = vmaxq_f64(vld1q_f64(v + i), vld1q_f64(lo + i));
    vst1q_f64(out + i, vminq_f64(c, vld1q_f64(hi + i)));
  }
  for (; i < n; ++i) out[i] = std::min(std::max(v[i], lo[i]), hi[i]);
}

double max_abs_neon(const double* a, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(a + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(a[i]));
  return r;
}

double max_abs_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
  }
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(a[i] - b[i]));
  return r;
}

void demand_weights_neon(const double* e, const double* x, double* out, std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gap = vsubq_f64(one, vld1q_f64(x + i));
    vst1q_f64(out + i, vsubq_f64(one, vmulq_f64(vld1q_f64(e + i), gap)));
  }
  for (; i < n; ++i) out[i] = 1.0 - e[i] * (1.0 - x[i]);
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double weighted_sq_sum_neon(const double* w, const double* s, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t p = vmulq_f64(vld1q_f64(w + i), vld1q_f64(s + i));
    acc = vfmaq_f64(acc, p, p);
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double p = w[i] * s[i];
    r += p * p;
  }
  return r;
}

void admm_project_neon(const double* zt, double* z, double* y, const double* rho,
                       const double* lo, const double* hi, double alpha, std::size_t n) {
  const double beta = 1.0 - alpha;
  const float64x2_t va = vdupq_n_f64(alpha);
  const float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vr = vld1q_f64(rho + i);
    const float64x2_t vy = vld1q_f64(y + i);
    const float64x2_t v = vaddq_f64(vmulq_f64(va, vld1q_f64(zt + i)), vmulq_f64(vb, vld1q_f64(z + i)));
    float64x2_t zn = vaddq_f64(v, vdivq_f64(vy, vr));
    zn = vminq_f64(vmaxq_f64(zn, vld1q_f64(lo + i)), vld1q_f64(hi + i));
    vst1q_f64(y + i, vaddq_f64(vy, vmulq_f64(vr, vsubq_f64(v, zn))));
    vst1q_f64(z + i, zn);
  }
  for (; i < n; ++i) {
    const double v = alpha * zt[i] + beta * z[i];
    const double zn = std::min(std::max(v + y[i] / rho[i], lo[i]), hi[i]);
    y[i] += rho[i] * (v - zn);
    z[i] = zn;
  }
}

}  // namespace

const KernelTable& neon_table_impl() {
  static const KernelTable table{
      "neon",           dot_neon,         axpy_neon,
      clamp_neon,       max_abs_neon,     max_abs_diff_neon,
      demand_weights_neon, mul_neon,      weighted_sq_sum_neon,
      admm_project_neon,
  };
  return table;
}

}  // namespace fleetpricer::kernels
