#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "fleetpricer/kernels.hpp"

namespace fleetpricer::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d vabs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void clamp_avx2(const double* v, const double* lo, const double* hi, double* out,
                std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d c = _mm256_max_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(lo + i));
    _mm256_storeu_pd(out + i, _mm256_min_pd(c, _mm256_loadu_pd(hi + i)));
  }
  for (; i < n; ++i) out[i] = std::min(std::max(v[i], lo[i]), hi[i]);
}

double max_abs_avx2(const double* a, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, vabs(_mm256_loadu_pd(a + i)));
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(a[i]));
  return r;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    m = _mm256_max_pd(m, vabs(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  }
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(a[i] - b[i]));
  return r;
}

void demand_weights_avx2(const double* e, const double* x, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gap = _mm256_sub_pd(one, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(one, _mm256_mul_pd(_mm256_loadu_pd(e + i), gap)));
  }
  for (; i < n; ++i) out[i] = 1.0 - e[i] * (1.0 - x[i]);
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double weighted_sq_sum_avx2(const double* w, const double* s, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(s + i));
    acc = _mm256_fmadd_pd(p, p, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) {
    const double p = w[i] * s[i];
    r += p * p;
  }
  return r;
}

void admm_project_avx2(const double* zt, double* z, double* y, const double* rho,
                       const double* lo, const double* hi, double alpha, std::size_t n) {
  const double beta = 1.0 - alpha;
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vr = _mm256_loadu_pd(rho + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(zt + i)),
                                    _mm256_mul_pd(vb, _mm256_loadu_pd(z + i)));
    __m256d zn = _mm256_add_pd(v, _mm256_div_pd(vy, vr));
    zn = _mm256_min_pd(_mm256_max_pd(zn, _mm256_loadu_pd(lo + i)), _mm256_loadu_pd(hi + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(vr, _mm256_sub_pd(v, zn))));
    _mm256_storeu_pd(z + i, zn);
  }
  for (; i < n; ++i) {
    const double v = alpha * zt[i] + beta * z[i];
    const double zn = std::min(std::max(v + y[i] / rho[i], lo[i]), hi[i]);
    y[i] += rho[i] * (v - zn);
    z[i] = zn;
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      "avx2",           dot_avx2,         axpy_avx2,
      clamp_avx2,       max_abs_avx2,     max_abs_diff_avx2,
      demand_weights_avx2, mul_avx2,      weighted_sq_sum_avx2,
      admm_project_avx2,
  };
  return table;
}

}  // namespace fleetpricer::kernels
