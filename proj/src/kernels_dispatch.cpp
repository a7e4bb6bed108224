#include <cstdlib>
#include <string_view>

#include "fleetpricer/kernels.hpp"

namespace fleetpricer::kernels {

#if defined(FLEETPRICER_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif
#if defined(FLEETPRICER_HAVE_NEON)
const KernelTable& neon_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(FLEETPRICER_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(FLEETPRICER_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &neon_table_impl();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("FLEETPRICER_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return scalar_table();
  if (want == "avx2" && avx2_table()) return *avx2_table();
  if (want == "neon" && neon_table()) return *neon_table();
  if (const KernelTable* t = avx2_table()) return *t;
  if (const KernelTable* t = neon_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace fleetpricer::kernels
