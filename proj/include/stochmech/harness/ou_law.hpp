#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace stochmech::harness {

/// Long stationary runs of dA = -beta A dt + beta dW on independent paths.
struct OuLawConfig {
  double dt = 0.0;        ///< 0: 0.1 / beta
  double duration = 0.0;  ///< 0: 200 / beta
  std::size_t paths = 10000;
  std::size_t lags = 16;
  double max_lag = 1.5;   ///< largest lag in units of 1/beta
  std::size_t groups = 20;
  std::size_t threads = 0;
};

struct OuLawReport {
  double beta = 0.0;
  double dt = 0.0;
  double duration = 0.0;
  std::size_t paths = 0;
  /// paths * duration * beta / 2 (integrated correlation time 1/beta).
  double effective_samples = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
  /// Log-linear fit c(s) = amplitude * exp(-decay_rate * s) over the lags.
  double amplitude = 0.0;
  double amplitude_stderr = 0.0;
  double decay_rate = 0.0;
  double decay_rate_stderr = 0.0;
  std::vector<double> lag;
  std::vector<double> autocovariance;
  std::vector<double> autocovariance_stderr;
  std::vector<double> oracle;  ///< (beta/2) exp(-beta s)
};

/// A(0) ~ N(0, beta/2); path p uses stream p. Errors from a grouped jackknife
/// over paths (p mod groups).
OuLawReport ou_law(double beta, const OuLawConfig& cfg, std::uint64_t seed);

}  // namespace stochmech::harness
