#pragma once

// Shared constants for the bit-reproducible exponential. The scalar and AVX2
// paths evaluate exactly this sequence of roundings.

#include <bit>
#include <cstdint>

namespace stochmech::simd::detail {

inline constexpr double kLog2e = 1.4426950408889634073599;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;  // 21 trailing zero bits
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kRoundMagic = 6755399441055744.0;  // 1.5 * 2^52
inline constexpr double kExpFloor = -700.0;

// 1/k! for k = 12 .. 0, Horner order.
inline constexpr double kExpCoeffs[13] = {
    2.08767569878680989792e-09, 2.50521083854417187751e-08,
    2.75573192239858906526e-07, 2.75573192239858906526e-06,
    2.48015873015873015873e-05, 1.98412698412698412698e-04,
    1.38888888888888888889e-03, 8.33333333333333333333e-03,
    4.16666666666666666667e-02, 1.66666666666666666667e-01,
    5.00000000000000000000e-01, 1.0,
    1.0};

inline double exp_nonpositive_scalar(double x) {
  if (!(x >= kExpFloor)) return 0.0;
  const double t = x * kLog2e + kRoundMagic;
  const double n = t - kRoundMagic;
  const double r = (x - n * kLn2Hi) - n * kLn2Lo;
  double p = kExpCoeffs[0];
  for (int i = 1; i < 13; ++i) p = p * r + kExpCoeffs[i];
  const std::int64_t k = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(kRoundMagic);
  const double scale = std::bit_cast<double>((k + 1023) << 52);
  return p * scale;
}

}  // namespace stochmech::simd::detail
