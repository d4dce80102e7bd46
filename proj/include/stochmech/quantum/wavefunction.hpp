#pragma once

#include <complex>
#include <vector>

#include "stochmech/quantum/grid.hpp"

namespace stochmech::quantum {

using cplx = std::complex<double>;

/// One particle on a 1-D grid.
struct WavefunctionState {
  Grid1D grid;
  std::vector<cplx> psi;
  double mass = 1.0;
  double hbar = 1.0;
  double t = 0.0;

  std::vector<double> density() const;
  double norm() const;  ///< trapezoid integral of |psi|^2
  void normalize();
  /// Largest |psi|^2 over the two outermost points on each side.
  double edge_density() const;
};

/// Two particles, each on `grid`; psi is row-major with index i1 * n + i2.
struct Wavefunction2D {
  Grid1D grid;
  std::vector<cplx> psi;
  double mass1 = 1.0;
  double mass2 = 1.0;
  double hbar = 1.0;
  double t = 0.0;

  std::size_t n() const { return grid.n; }
  cplx& at(std::size_t i1, std::size_t i2) { return psi[i1 * grid.n + i2]; }
  const cplx& at(std::size_t i1, std::size_t i2) const { return psi[i1 * grid.n + i2]; }
  std::vector<double> density() const;
  double norm() const;
  void normalize();
  double edge_density() const;
};

/// |<a|b>| on a common grid.
double overlap(const WavefunctionState& a, const WavefunctionState& b);
double overlap(const Wavefunction2D& a, const Wavefunction2D& b);

}  // namespace stochmech::quantum
