#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stochmech/sde/noise_stream.hpp"

namespace stochmech::sde {

/// Largest allowed dt·β: the colored-noise correlation time must span
/// several steps.
inline constexpr double kMaxDtBeta = 0.1;

enum class OuScheme {
  exact,  ///< A ← e^{-βdt}A + √(β/2·(1−e^{-2βdt}))·z
  euler,  ///< A ← (1−βdt)A + β√dt·z, kept for cross-checks
};

struct IntegratorConfig {
  double dt = 1e-3;
  std::size_t n_steps = 1000;
  double t0 = 0.0;
  OuScheme ou_scheme = OuScheme::exact;

  double horizon() const { return t0 + dt * static_cast<double>(n_steps); }
  double time_at(std::size_t step) const { return t0 + dt * static_cast<double>(step); }

  /// Throws InvalidArgument on dt ≤ 0, ConfigError when dt·β > kMaxDtBeta.
  void validate() const;
  void validate_with_beta(double beta) const;
};

/// n independent N(0, dt) increments.
std::vector<double> wiener_increments(NoiseStream& stream, std::size_t n, double dt);

/// Colored noise dA = −βA dt + β dW. Returns n_steps + 1 values starting at A0.
/// With `noise` false the path is the deterministic decay A0·e^{−βt}.
std::vector<double> simulate_ou(double beta, double a0, const IntegratorConfig& cfg,
                                NoiseStream& stream, bool noise = true);

/// Per-step coefficients of the OU update for the configured scheme.
struct OuStep {
  double decay;
  double scale;
};
OuStep ou_step(double beta, double dt, OuScheme scheme);

/// Stationary variance β/2 of the colored noise.
inline double ou_stationary_variance(double beta) { return 0.5 * beta; }

struct Trajectory {
  std::vector<double> values;  ///< n_steps + 1 entries, values[0] = x0
  bool valid = true;
  std::size_t first_invalid_step = 0;
};

/// Itô Euler–Maruyama for a scalar state:
///   x_{k+1} = x_k + drift(x_k, t_k)·dt + diffusion·ΔW_k.
/// A non-finite state marks the trajectory invalid; the path is cut there.
Trajectory euler_maruyama(const std::function<double(double, double)>& drift,
                          double diffusion, double x0, const IntegratorConfig& cfg,
                          NoiseStream& stream);

}  // namespace stochmech::sde
