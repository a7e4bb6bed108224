#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fleetpricer/kernels.hpp"

using namespace fleetpricer::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Elementwise kernels must match bit for bit; reductions up to reassociation.
void compare_tables(const KernelTable& ref, const KernelTable& vec) {
  std::mt19937_64 rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 257u, 1000u}) {
    CAPTURE(n);
    const auto a = random_vec(rng, n, -3.0, 3.0);
    const auto b = random_vec(rng, n, -3.0, 3.0);
    const auto lo = random_vec(rng, n, -1.0, 0.0);
    const auto hi = random_vec(rng, n, 0.0, 1.0);
    const auto rho = random_vec(rng, n, 0.01, 10.0);

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    CHECK(std::abs(ref.dot(a.data(), b.data(), n) - vec.dot(a.data(), b.data(), n)) <= 1e-14 * (scale + 1.0));

    double wss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wss += (a[i] * b[i]) * (a[i] * b[i]);
    CHECK(std::abs(ref.weighted_sq_sum(a.data(), b.data(), n) - vec.weighted_sq_sum(a.data(), b.data(), n)) <=
          1e-14 * (wss + 1.0));

    CHECK(ref.max_abs(a.data(), n) == vec.max_abs(a.data(), n));
    CHECK(ref.max_abs_diff(a.data(), b.data(), n) == vec.max_abs_diff(a.data(), b.data(), n));

    std::vector<double> y1 = b, y2 = b;
    ref.axpy(0.37, a.data(), y1.data(), n);
    vec.axpy(0.37, a.data(), y2.data(), n);
    CHECK(y1 == y2);

    std::vector<double> o1(n), o2(n);
    ref.clamp(a.data(), lo.data(), hi.data(), o1.data(), n);
    vec.clamp(a.data(), lo.data(), hi.data(), o2.data(), n);
    CHECK(o1 == o2);

    ref.demand_weights(a.data(), b.data(), o1.data(), n);
    vec.demand_weights(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);

    ref.mul(a.data(), b.data(), o1.data(), n);
    vec.mul(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);

    std::vector<double> z1 = b, z2 = b, w1 = a, w2 = a;
    const auto zt = random_vec(rng, n, -2.0, 2.0);
    ref.admm_project(zt.data(), z1.data(), w1.data(), rho.data(), lo.data(), hi.data(), 1.6, n);
    vec.admm_project(zt.data(), z2.data(), w2.data(), rho.data(), lo.data(), hi.data(), 1.6, n);
    CHECK(z1 == z2);
    CHECK(w1 == w2);
  }
}

}  // namespace

TEST_CASE("scalar kernels against plain loops") {
  const KernelTable& s = scalar_table();
  const std::vector<double> a{1.0, -2.0, 3.0}, b{4.0, 5.0, -6.0};
  CHECK(s.dot(a.data(), b.data(), 3) == -24.0);
  CHECK(s.max_abs(b.data(), 3) == 6.0);
  CHECK(s.max_abs_diff(a.data(), b.data(), 3) == 9.0);
  CHECK(s.weighted_sq_sum(a.data(), b.data(), 3) == 16.0 + 100.0 + 324.0);
  std::vector<double> out(3);
  const std::vector<double> e{-1.5, -1.5, -2.0}, x{1.0, 0.9, 1.1};
  s.demand_weights(e.data(), x.data(), out.data(), 3);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(1.15).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("avx2 kernels match scalar") {
  const KernelTable* t = avx2_table();
  if (!t) {
    MESSAGE("avx2 variant unavailable on this host");
    return;
  }
  compare_tables(scalar_table(), *t);
}

TEST_CASE("neon kernels match scalar") {
  const KernelTable* t = neon_table();
  if (!t) {
    MESSAGE("neon variant unavailable on this host");
    return;
  }
  compare_tables(scalar_table(), *t);
}

TEST_CASE("dispatch picks a compiled table") {
  const KernelTable& a = active();
  CHECK(a.name != nullptr);
  CHECK((&a == &scalar_table() || &a == avx2_table() || &a == neon_table()));
}
