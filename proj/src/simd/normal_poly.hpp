#pragma once

// Box-Muller from one Philox block with in-house log and sincos polynomials,
// so that the scalar and AVX2 generators produce identical bits. The AVX2
// path in kernels_avx2.cpp evaluates exactly this sequence of roundings.

#include <bit>
#include <cmath>
#include <cstdint>

#include "exp_poly.hpp"

namespace stochmech::simd::detail {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kTwoPi = 6.28318530717958647692;
inline constexpr std::uint64_t kMantissaMask = 0x000FFFFFFFFFFFFFull;
inline constexpr std::uint64_t kExponentOne = 0x3FF0000000000000ull;

// 2/(2k+1) for k = 10 .. 0: log m = s * P(s^2), s = (m-1)/(m+1).
inline constexpr double kLogCoeffs[11] = {2.0 / 21, 2.0 / 19, 2.0 / 17, 2.0 / 15, 2.0 / 13, 2.0 / 11,
                                          2.0 / 9,  2.0 / 7,  2.0 / 5,  2.0 / 3,  2.0};
// (-1)^k / (2k+1)! for k = 8 .. 1.
inline constexpr double kSinCoeffs[8] = {2.81145725434552076e-15, -7.64716373181981647e-13,
                                         1.60590438368216146e-10, -2.50521083854417188e-08,
                                         2.75573192239858907e-06, -1.98412698412698413e-04,
                                         8.33333333333333333e-03, -1.66666666666666667e-01};
// (-1)^k / (2k)! for k = 9 .. 1.
inline constexpr double kCosCoeffs[9] = {-1.56192069685862265e-16, 4.77947733238738530e-14,
                                         -1.14707455977297247e-11, 2.08767569878680990e-09,
                                         -2.75573192239858907e-07, 2.48015873015873016e-05,
                                         -1.38888888888888889e-03, 4.16666666666666667e-02,
                                         -5.00000000000000000e-01};

/// (2^53 - 1 resolution) uniform on (0, 1) from two words.
inline double open_unit_scalar(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Natural log for normal u in (0, 1].
inline double log_unit_scalar(double u) {
  const auto bits = std::bit_cast<std::uint64_t>(u);
  std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1023;
  double m = std::bit_cast<double>((bits & kMantissaMask) | kExponentOne);
  if (m > kSqrt2) {
    m = m * 0.5;
    e += 1;
  }
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = kLogCoeffs[0];
  for (int i = 1; i < 11; ++i) p = p * s2 + kLogCoeffs[i];
  const double ed = static_cast<double>(e);
  return ed * kLn2Hi + (s * p + ed * kLn2Lo);
}

/// sin and cos of 2*pi*u for u in (0, 1).
inline void sincos_turn_scalar(double u, double& sn, double& cs) {
  const double kd = std::floor(u * 4.0 + 0.5);
  const double a = (u - kd * 0.25) * kTwoPi;  // |a| <= pi/4, reduction exact
  const double z = a * a;
  double ps = kSinCoeffs[0];
  for (int i = 1; i < 8; ++i) ps = ps * z + kSinCoeffs[i];
  double pc = kCosCoeffs[0];
  for (int i = 1; i < 9; ++i) pc = pc * z + kCosCoeffs[i];
  const double s = a + a * (z * ps);
  const double c = 1.0 + z * pc;
  switch (static_cast<int>(kd) & 3) {
    case 0: sn = s; cs = c; break;
    case 1: sn = c; cs = -s; break;
    case 2: sn = -s; cs = -c; break;
    default: sn = -c; cs = s; break;
  }
}

inline void box_muller_scalar(std::uint32_t w0, std::uint32_t w1, std::uint32_t w2,
                              std::uint32_t w3, double& z_cos, double& z_sin) {
  const double u1 = open_unit_scalar(w0, w1);
  const double u2 = open_unit_scalar(w2, w3);
  const double r = std::sqrt(-2.0 * log_unit_scalar(u1));
  double sn, cs;
  sincos_turn_scalar(u2, sn, cs);
  z_cos = r * cs;
  z_sin = r * sn;
}

}  // namespace stochmech::simd::detail
