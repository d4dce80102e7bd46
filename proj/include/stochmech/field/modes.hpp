#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stochmech/estimators/derivatives.hpp"
#include "stochmech/process/simulators.hpp"

namespace stochmech::field {

enum class ModeShape : std::uint8_t { constant, cosine, sine };

/// Real periodic basis on [0, L): 1/sqrt(L), then sqrt(2/L) cos(kx),
/// sqrt(2/L) sin(kx) for k = 2 pi j / L, j = 1, 2, ... Mode i has wavenumber
/// k[i] and frequency omega[i] = sqrt(m^2 + k^2), ascending in i.
struct ModeSystem {
  double length = 1.0;
  double field_mass = 0.0;
  std::vector<ModeShape> shape;
  std::vector<double> k;
  std::vector<double> omega;

  std::size_t size() const { return k.size(); }
  double u(std::size_t i, double x) const;
  /// Row-major [point][mode] table of u_i(x).
  std::vector<double> basis_matrix(std::span<const double> x) const;
};

ModeSystem mode_basis(double length, std::size_t n_modes, double field_mass);

/// Per-mode phase-space run: dq = v dt + eps A dt, dv = -omega^2 q dt,
/// colored A per mode on its own stream. Unit mode mass.
struct FieldRunSpec {
  std::vector<double> betas;  ///< one per mode, or a single value for all
  double hbar = 1.0;
  double eps = -1.0;          ///< < 0: sqrt(hbar)
  /// Initial modes: q_i ~ N(0, hbar/(2 omega_i)), v_i = -omega_i q_i + spread * xi.
  process::VelocityInitProfile profile;
};

sde::TrajectoryEnsemble simulate_field_phase_space(const ModeSystem& modes,
                                                   const FieldRunSpec& spec,
                                                   const process::RunConfig& run);

/// Field and conjugate velocity of one configuration on a grid.
struct FieldSnapshot {
  std::vector<double> x;
  std::vector<double> phi;
  std::vector<double> V;
};

FieldSnapshot reconstruct_field(std::span<const double> q, std::span<const double> v,
                                const ModeSystem& modes, std::span<const double> x);
/// Trajectory `traj` at record `rec`.
FieldSnapshot reconstruct_field(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                std::size_t rec, std::size_t traj, std::span<const double> x);

/// Coefficients int phi u_i dx by the rectangle rule on a uniform periodic
/// grid of [0, L) (exact for trigonometric polynomials below the grid Nyquist).
std::vector<double> project_field(std::span<const double> phi, const ModeSystem& modes);

/// Empirical equal-time covariance of xi(x) = eps sum_i u_i(x) A_i at probe
/// pairs, divided by the stationary OU variance beta/2 so that it estimates
/// eps^2 K_N(x, x') with K_N = sum_{i<N} u_i(x) u_i(x').
struct NoiseCovariance {
  std::vector<double> x, x_prime;
  std::vector<double> covariance;  ///< per probe pair
  std::vector<double> stderr_;
  std::vector<double> kernel;      ///< eps^2 K_N(x, x')
  std::vector<double> mean;        ///< sample mean of xi at x (normalized the same way)
  std::vector<double> mean_stderr;
};

NoiseCovariance noise_covariance_check(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                       std::size_t rec, double eps, double beta,
                                       std::span<const double> x, std::span<const double> x_prime);

/// Ratio K(x, x')/K(x, x) of the empirical covariances with a grouped
/// jackknife error (20 groups).
struct RatioEstimate {
  double ratio = 0.0;
  double stderr_ = 0.0;
  double kernel_ratio = 0.0;
};
RatioEstimate noise_covariance_ratio(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                     std::size_t rec, double x, double x_prime);

/// Per-mode Newton–Nelson residuals combined through the basis. Mode i gives
/// the density-weighted norm r_i of accel_i(q) + omega_i^2 q; the field
/// residual at x is sqrt(sum r_i^2 u_i(x)^2) (modes independent) and the
/// norm is its RMS over the probes.
struct FieldResidual {
  std::vector<double> mode_norm;
  std::vector<double> mode_pooled_stderr;
  std::vector<double> probe_residual;
  double norm = 0.0;
  double pooled_stderr = 0.0;
};
/// `mode_deltas`, when given, overrides the lag per mode (fast modes need
/// lags well below 1/omega_i); each t +- delta_i must be recorded.
FieldResidual field_nn_residual(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                double t, const estimators::DerivativeSettings& settings,
                                std::span<const double> probes,
                                std::span<const double> mode_deltas = {});

}  // namespace stochmech::field
