#pragma once

// Elementwise arithmetic kernels used by the ensemble engine and the density
// estimator. Every kernel has a scalar reference implementation and, on x86-64,
// an AVX2 variant chosen at runtime. The variants perform the same IEEE
// operations in the same order (no FMA contraction), so results are
// bit-identical across backends and across any partition of the arrays.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace stochmech::simd {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

/// Backends usable on this machine, scalar first.
std::span<const Backend> available_backends();

/// Backend used by default. Honors STOCHMECH_SIMD=scalar|avx2 when set.
Backend active_backend();

/// Overrides the process-wide backend (tests and benchmarks).
void set_active_backend(Backend b);

struct KernelTable {
  // x[i] = (x[i] + drift[i] * dt) + scale * noise[i]
  void (*euler_update)(std::span<double> x, std::span<const double> drift,
                       std::span<const double> noise, double dt, double scale);
  // a[i] = decay * a[i] + scale * z[i]
  void (*linear_recurrence)(std::span<double> a, std::span<const double> z,
                            double decay, double scale);
  // out[i] = out[i] + slope * x[i]
  void (*axpy)(std::span<double> out, std::span<const double> x, double slope);
  // out[i] = value
  void (*fill)(std::span<double> out, double value);
  // out[i] = scale * z[i]
  void (*scale)(std::span<double> out, std::span<const double> z, double scale);
  // acc[g] += sum_s exp(-0.5 * ((grid[g] - samples[s]) * inv_bw)^2)
  // Terms with |u| > 12 are dropped. Summation over samples is in input order.
  void (*gaussian_kernel_sum)(std::span<const double> grid,
                              std::span<const double> samples, double inv_bw,
                              std::span<double> acc);
  // For stream s = first_stream + i, i < z_cos.size(): one Philox4x32-10
  // block at (counter, channel, s) under key seed, turned into a Box-Muller
  // pair (z_cos[i], z_sin[i]). Same layout as sde::NoiseStream.
  void (*philox_normals)(std::uint64_t seed, std::uint64_t first_stream, std::uint32_t channel,
                         std::uint64_t counter, std::span<double> z_cos,
                         std::span<double> z_sin);
};

const KernelTable& kernels();
const KernelTable& kernels(Backend b);

/// exp(x) for x <= 0 using the shared polynomial; identical bits in every
/// backend. Returns 0 below -700.
double exp_nonpositive(double x);

/// Box-Muller pair from one Philox block (words w0..w3); identical bits to
/// the philox_normals kernels.
void normal_pair(std::uint32_t w0, std::uint32_t w1, std::uint32_t w2, std::uint32_t w3,
                 double& z_cos, double& z_sin);

/// Polynomial log on (0, 1] and sincos of 2*pi*u used by normal_pair.
double log_unit(double u);
void sincos_turn(double u, double& sn, double& cs);

}  // namespace stochmech::simd
