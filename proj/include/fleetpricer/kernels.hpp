#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops shared by the QP solver, utilization evaluation
// and the Monte Carlo evaluator. Every kernel has a scalar reference
// implementation; vector variants (AVX2+FMA on x86-64, NEON on AArch64) are
// selected once at runtime. Elementwise kernels are bit-identical across
// variants; reductions (dot, weighted_sq_sum) differ only in summation order.
//
// FLEETPRICER_SIMD=scalar|avx2|neon|auto overrides the runtime choice.

namespace fleetpricer::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*clamp)(const double* v, const double* lo, const double* hi, double* out, std::size_t n);
  double (*max_abs)(const double* a, std::size_t n);
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  // out = 1 - e * (1 - x): the linear elasticity response weight
  void (*demand_weights)(const double* e, const double* x, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // sum (w * s)^2
  double (*weighted_sq_sum)(const double* w, const double* s, std::size_t n);
  // Relaxed ADMM projection step, in place on z and y:
  //   v = alpha*zt + (1-alpha)*z;  z' = clamp(v + y/rho, lo, hi);  y += rho*(v - z')
  void (*admm_project)(const double* zt, double* z, double* y, const double* rho, const double* lo,
                       const double* hi, double alpha, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void clamp(std::span<const double> v, std::span<const double> lo,
                  std::span<const double> hi, std::span<double> out) {
  active().clamp(v.data(), lo.data(), hi.data(), out.data(), v.size());
}
inline double max_abs(std::span<const double> a) { return active().max_abs(a.data(), a.size()); }
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}
inline void demand_weights(std::span<const double> e, std::span<const double> x,
                           std::span<double> out) {
  active().demand_weights(e.data(), x.data(), out.data(), e.size());
}
inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().mul(a.data(), b.data(), out.data(), a.size());
}
inline double weighted_sq_sum(std::span<const double> w, std::span<const double> s) {
  return active().weighted_sq_sum(w.data(), s.data(), w.size());
}

}  // namespace fleetpricer::kernels
