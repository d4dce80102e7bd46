#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stochmech/estimators/binning.hpp"
#include "stochmech/sde/ensemble.hpp"

namespace stochmech::estimators {

/// Binned field over x with grouped-jackknife standard errors.
struct DerivativeField {
  Bins bins;
  double t = 0.0;
  double delta = 0.0;
  std::vector<double> estimate;
  std::vector<double> stderr_;
  std::vector<std::size_t> count;
  std::vector<std::uint8_t> reliable;
  /// Mean of the conditioning variable in each bin. A bin average of a
  /// linear field equals its value here, so nodes sit at x_mean, not at
  /// the bin centers.
  std::vector<double> x_mean;
  /// Leave-one-group-out estimates, [group][bin]. Neighbouring bins share
  /// inner-field noise, so derived statistics take their errors from here.
  std::size_t groups = 0;
  std::vector<double> replicates;

  std::size_t reliable_count() const;
  /// Piecewise-linear through the reliable (x_mean, estimate) nodes,
  /// constant beyond them.
  double at(double x) const;
};

struct DerivativeSettings {
  double delta = 0.0;          ///< lag; must be a recorded spacing multiple
  std::optional<Bins> bins;    ///< default: Freedman–Diaconis on x(t)
  std::size_t n_min = kDefaultMinCount;
  std::size_t groups = 20;     ///< jackknife groups (trajectory id mod groups)
  std::size_t particle = 0;
  std::size_t threads = 0;
};

/// E[(x(t+δ) − x(t))/δ | x(t)].
DerivativeField forward_derivative(const sde::TrajectoryEnsemble& ens, double t,
                                   const DerivativeSettings& s);
/// E[(x(t) − x(t−δ))/δ | x(t)].
DerivativeField backward_derivative(const sde::TrajectoryEnsemble& ens, double t,
                                    const DerivativeSettings& s);

struct AccelerationEstimate {
  DerivativeField symmetric;      ///< average of the two compositions
  DerivativeField minus_of_plus;  ///< D− applied to the binned D+x field
  DerivativeField plus_of_minus;  ///< D+ applied to the binned D−x field
};

/// Composition estimate of ½(D+D− + D−D+)x at t. The inner binned fields
/// are taken at t−δ, t (D+) and t, t+δ (D−) and interpolated along each
/// trajectory. Needs records at t−δ, t, t+δ. Each jackknife replicate
/// recomputes the inner fields without its group. A bin is unreliable when
/// over 1% of its trajectories land outside the inner fields' node range.
AccelerationEstimate stochastic_acceleration(const sde::TrajectoryEnsemble& ens, double t,
                                             const DerivativeSettings& s);

struct ResidualReport {
  Bins bins;
  std::vector<double> x_mean;
  std::vector<double> residual;
  std::vector<double> stderr_;
  std::vector<std::size_t> count;
  std::vector<std::uint8_t> reliable;
  double norm = 0.0;           ///< sqrt(Σ w r²) over reliable bins, w = count share
  double pooled_stderr = 0.0;  ///< sqrt(Σ w se²)
  double norm_stderr = 0.0;    ///< jackknife error of norm (NaN without replicates)
};

/// residual = accel − force at each bin's x_mean, force = −(1/m) dU/dx.
ResidualReport newton_nelson_residual(const DerivativeField& accel,
                                      const std::function<double(double)>& force);

/// Density-weighted L2 norm of (field − reference) over reliable bins, with the
/// matching pooled standard error.
struct FieldDistance {
  double norm = 0.0;
  double pooled_stderr = 0.0;
};
FieldDistance weighted_distance(const DerivativeField& field,
                                const std::function<double(double)>& reference);

/// Weighted least-squares line estimate ≈ intercept + slope * x_mean over
/// reliable bins, weights 1/se². Errors by jackknife over the replicates
/// when present, else from the independent-bin formula.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};
LineFit fit_line(const DerivativeField& field);

}  // namespace stochmech::estimators
