#pragma once

#include "stochmech/quantum/grid.hpp"
#include "stochmech/quantum/wavefunction.hpp"

namespace stochmech::quantum {

inline constexpr double kNodeThreshold = 1e-8;  // relative to max rho
inline constexpr double kDriftClamp = 1e3;
/// Phase change per grid cell above which a node is assumed between samples.
inline constexpr double kNodePhaseStep = 1.5707963267948966;

/// rho = |psi|^2 and S = hbar * unwrapped phase. S carries the valid mask
/// (rho > kNodeThreshold * max rho, minus the two samples around any phase
/// step larger than kNodePhaseStep) and is continuous on each connected
/// component only; it is NaN elsewhere.
struct MadelungPair {
  ScalarField rho;
  ScalarField S;
  double hbar = 1.0;
};

/// Drift on the grid. Outside the valid mask the value is the clamp: magnitude
/// b_max pointing away from the nearest node (interior gaps) or back toward
/// the support (tails at the grid edges).
struct DriftField {
  ScalarField b;
  double b_max = kDriftClamp;

  double at(double x) const;
};

MadelungPair madelung_split(const WavefunctionState& state);

/// Reconstruct sqrt(rho) exp(iS/hbar); zero off the mask.
std::vector<cplx> reconstruct(const MadelungPair& pair);

DriftField nelson_drift(const MadelungPair& pair, double mass, double hbar,
                        double b_max = kDriftClamp);

/// Q = (hbar^2 / 2m) (sqrt rho)'' / sqrt rho on the mask of rho (or on
/// rho > kNodeThreshold * max rho when rho has no mask).
ScalarField quantum_potential(const ScalarField& rho, double mass, double hbar);

/// Fill masked-out entries of `values` with the clamp rule.
void apply_node_clamp(std::vector<double>& values, std::span<const std::uint8_t> mask,
                      double b_max);

/// Per-coordinate drift of a two-particle state, from finite differences of
/// psi along each axis: b_j = (hbar/m_j) (Im + Re)(d_j psi / psi).
struct DriftField2D {
  Grid1D grid;
  std::vector<double> b1;  ///< row-major like Wavefunction2D::psi
  std::vector<double> b2;
  std::vector<std::uint8_t> mask;
  double b_max = kDriftClamp;

  /// Bilinear interpolation; clamps to the grid edge.
  void at(double x1, double x2, double& out1, double& out2) const;
};

DriftField2D nelson_drift(const Wavefunction2D& state, double b_max = kDriftClamp);

}  // namespace stochmech::quantum
