#include <array>
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "exp_poly.hpp"
#include "normal_poly.hpp"
#include "kernels_impl.hpp"

namespace stochmech::simd {
namespace {

bool cpu_has_avx2() {
#if defined(STOCHMECH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect_default() {
  const bool avx2 = cpu_has_avx2();
  if (const char* env = std::getenv("STOCHMECH_SIMD")) {
    const std::string v{env};
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && avx2) return Backend::avx2;
  }
  return avx2 ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{detect_default()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

std::span<const Backend> available_backends() {
  static const std::vector<Backend> list = [] {
    std::vector<Backend> v{Backend::scalar};
    if (cpu_has_avx2()) v.push_back(Backend::avx2);
    return v;
  }();
  return list;
}

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void set_active_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2()) b = Backend::scalar;
  active().store(b, std::memory_order_relaxed);
}

const KernelTable& kernels(Backend b) {
#if defined(STOCHMECH_HAVE_AVX2)
  if (b == Backend::avx2 && cpu_has_avx2()) return detail::avx2_table();
#endif
  (void)b;
  return detail::scalar_table();
}

const KernelTable& kernels() { return kernels(active_backend()); }

double exp_nonpositive(double x) { return detail::exp_nonpositive_scalar(x); }

void normal_pair(std::uint32_t w0, std::uint32_t w1, std::uint32_t w2, std::uint32_t w3,
                 double& z_cos, double& z_sin) {
  detail::box_muller_scalar(w0, w1, w2, w3, z_cos, z_sin);
}

double log_unit(double u) { return detail::log_unit_scalar(u); }

void sincos_turn(double u, double& sn, double& cs) { detail::sincos_turn_scalar(u, sn, cs); }

}  // namespace stochmech::simd
