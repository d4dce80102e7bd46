#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace stochmech::estimators {

/// Equal-width bins [lo + j*width, lo + (j+1)*width), j < count.
struct Bins {
  double lo = 0.0;
  double width = 1.0;
  std::size_t count = 0;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double hi() const { return lo + width * static_cast<double>(count); }
  double center(std::size_t j) const { return lo + width * (static_cast<double>(j) + 0.5); }
  std::vector<double> centers() const;
  std::vector<double> edges() const;
  /// Bin index of x, npos outside [lo, hi) or for non-finite x.
  std::size_t locate(double x) const;

  static Bins uniform(double lo, double hi, std::size_t count);
};

/// Linear-interpolated sample quantile (type 7) of the finite entries.
double quantile(std::span<const double> samples, double q);
/// Same, for several probabilities with one sort.
std::vector<double> quantiles(std::span<const double> samples, std::span<const double> qs);

/// Freedman–Diaconis width over the [q_lo, q_hi] quantile range, then evened
/// out so the bins tile the range exactly.
Bins freedman_diaconis(std::span<const double> samples, double q_lo = 0.0005,
                       double q_hi = 0.9995);

inline constexpr std::size_t kDefaultMinCount = 50;

/// Per-bin sample statistics of f conditioned on the bin of x.
struct BinnedConditional {
  Bins bins;
  std::vector<std::size_t> count;
  std::vector<double> mean;
  std::vector<double> variance;  ///< unbiased sample variance of f in the bin
  std::vector<double> stderr_;   ///< sqrt(variance / count)
  std::vector<double> x_mean;    ///< mean of the conditioning variable per bin
  std::vector<std::uint8_t> reliable;
  std::size_t n_min = kDefaultMinCount;

  bool empty() const { return bins.count == 0; }
};

/// Pairs with non-finite x or f are skipped. Bins with fewer than n_min
/// samples are kept but marked unreliable. A Bins with count 0 yields an
/// empty result.
BinnedConditional conditional_mean(std::span<const double> x, std::span<const double> f,
                                   const Bins& bins, std::size_t n_min = kDefaultMinCount);

}  // namespace stochmech::estimators
