#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stochmech/quantum/madelung.hpp"
#include "stochmech/quantum/wavefunction.hpp"

namespace stochmech::quantum {

/// Parameters shared by the catalog. Unused entries are ignored by a state.
struct CatalogParams {
  double mass = 1.0;
  double hbar = 1.0;
  double omega = 1.0;
  double sigma0 = 1.0;  ///< free_gaussian initial width
  double x0 = 0.0;      ///< initial centre (free_gaussian) or displacement (ho_coherent)
  double p0 = 0.0;      ///< free_gaussian initial momentum
  /// two_particle_gaussian: initial exponent matrix in units of m*omega/hbar,
  /// entries (n11, n12, n22) of psi ~ exp(-kappa/2 x^T N0 x).
  std::array<double, 3> n0 = {1.0, 0.6, 1.0};
};

/// Closed-form one-particle state.
class AnalyticState1D {
 public:
  AnalyticState1D(double mass, double hbar) : mass_(mass), hbar_(hbar) {}
  virtual ~AnalyticState1D() = default;

  virtual std::string name() const = 0;
  virtual cplx psi(double x, double t) const = 0;
  /// psi'(x,t) / psi(x,t).
  virtual cplx log_derivative(double x, double t) const = 0;
  virtual double potential(double x) const = 0;

  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double rho(double x, double t) const { return std::norm(psi(x, t)); }
  /// (hbar/m)(Im + Re)(psi'/psi), clamped to |b| <= b_max.
  double drift(double x, double t, double b_max = kDriftClamp) const;
  /// Current velocity (1/m) dS/dx.
  double current_velocity(double x, double t) const;

  WavefunctionState state(const Grid1D& grid, double t) const;
  std::vector<double> potential_on(const Grid1D& grid) const;

 protected:
  double mass_;
  double hbar_;
};

/// psi = exp(-a(t) x^2 / 2 + c(t) x + d(t)) in a harmonic (omega > 0) or free
/// (omega = 0) potential, starting from (a0, c0) at time t_start. The global
/// phase is not tracked.
class GaussianState1D final : public AnalyticState1D {
 public:
  GaussianState1D(std::string name, double mass, double hbar, double omega, cplx a0, cplx c0,
                  double t_start = 0.0);

  std::string name() const override { return name_; }
  cplx psi(double x, double t) const override;
  cplx log_derivative(double x, double t) const override;
  double potential(double x) const override;

  cplx a(double t) const;
  cplx c(double t) const;
  double mean(double t) const;
  double variance(double t) const;

 private:
  std::string name_;
  double omega_;
  cplx a0_;
  cplx c0_;
  double t_start_;
};

/// (psi_0 + psi_1) / sqrt 2 of the harmonic oscillator.
class HoSuperposition01 final : public AnalyticState1D {
 public:
  HoSuperposition01(double mass, double hbar, double omega);
  std::string name() const override { return "ho_superposition_01"; }
  cplx psi(double x, double t) const override;
  cplx log_derivative(double x, double t) const override;
  double potential(double x) const override;

 private:
  double omega_;
  double kappa_;
};

/// Two equal-mass particles in uncoupled oscillators with an entangled
/// Gaussian initial state psi ~ exp(-x^T M(t) x / 2).
class TwoParticleGaussian {
 public:
  explicit TwoParticleGaussian(const CatalogParams& p);

  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double omega() const { return omega_; }

  Eigen::Matrix2cd M(double t) const;
  /// Position covariance (2 Re M)^{-1}.
  Eigen::Matrix2d covariance(double t) const;
  double rho(double x1, double x2, double t) const;
  cplx psi(double x1, double x2, double t) const;
  /// b = -(hbar/m)(Re M + Im M) x.
  Eigen::Matrix2d drift_matrix(double t) const;
  double potential(double x1, double x2) const;

  Wavefunction2D state(const Grid1D& grid, double t) const;
  std::vector<double> potential_on(const Grid1D& grid) const;

  /// Particle-2 wavefunction after particle 1 is found exactly at xbar1 at
  /// time t1 (the delta-limit collapse), as a state evolving from t1.
  GaussianState1D conditional_second(double xbar1, double t1) const;

 private:
  double mass_;
  double hbar_;
  double omega_;
  double kappa_;
  Eigen::Matrix2d n0_;
};

/// Catalog keys in listing order.
const std::vector<std::string>& catalog_names();
bool is_two_particle(std::string_view name);

/// One-particle catalog state; InvalidArgument for unknown or two-particle keys.
std::unique_ptr<AnalyticState1D> make_analytic(std::string_view name, const CatalogParams& p);

struct AnalyticSnapshot {
  WavefunctionState state;
  MadelungPair pair;
  DriftField drift;  ///< closed-form values on the valid mask, clamp elsewhere
};

AnalyticSnapshot analytic_state(std::string_view name, const CatalogParams& p, double t,
                                const Grid1D& grid);

}  // namespace stochmech::quantum
