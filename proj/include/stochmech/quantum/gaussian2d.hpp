#pragma once

#include <Eigen/Dense>

#include "stochmech/quantum/wavefunction.hpp"

namespace stochmech::quantum {

/// psi = exp(-x^T M(t) x / 2 + c(t)^T x) for two equal-mass particles in
/// identical uncoupled oscillators (omega = 0: free), starting from (M0, c0)
/// at t_start. Global phase and normalization are not tracked.
class GaussianState2D {
 public:
  GaussianState2D(double mass, double hbar, double omega, Eigen::Matrix2cd m0, Eigen::Vector2cd c0,
                  double t_start);

  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double t_start() const { return t_start_; }

  Eigen::Matrix2cd M(double t) const;
  Eigen::Vector2cd c(double t) const;
  /// Linear coefficient at t of a state that had linear coefficient v0 at t_start.
  Eigen::Vector2cd propagate_linear(const Eigen::Vector2cd& v0, double t) const;

  Eigen::Matrix2d covariance(double t) const;
  Eigen::Vector2d mean(double t) const;
  /// b = drift_matrix x + drift_offset.
  Eigen::Matrix2d drift_matrix(double t) const;
  Eigen::Vector2d drift_offset(double t) const;

  /// Multiply by the amplitude of a normalized Gaussian window of standard
  /// deviation `width` in the coordinate of `particle`, centred at `value`,
  /// at time t. The result starts at t.
  GaussianState2D collapsed(std::size_t particle, double value, double width, double t) const;

  /// Normalized samples on grid x grid.
  Wavefunction2D state(const Grid1D& grid, double t) const;

 private:
  Eigen::Matrix2cd A(double t) const;

  double mass_;
  double hbar_;
  double omega_;
  Eigen::Matrix2cd m0_;
  Eigen::Vector2cd c0_;
  double t_start_;
};

}  // namespace stochmech::quantum
