#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stochmech/quantum/catalog.hpp"
#include "stochmech/quantum/gaussian2d.hpp"
#include "stochmech/sde/ensemble.hpp"

namespace stochmech::harness {

/// Density on grid x grid, row-major with index i1 * n + i2.
struct ScalarField2D {
  quantum::Grid1D grid;
  std::vector<double> values;

  double integral() const;
  /// Marginal of coordinate `axis` (0 or 1).
  quantum::ScalarField marginal(std::size_t axis) const;
};

/// Conditional window mass below which a measurement is degenerate.
inline constexpr double kMinWindowMass = 1e-6;

/// g(x_k) c(x_other) with g a normalized Gaussian of the given width at
/// `value` and c the window-averaged conditional of the other coordinate.
ScalarField2D collapse_density(const ScalarField2D& rho, double value, double width,
                               std::size_t particle = 0);

/// Polynomial sum_i coeffs[i] x^i, or the indicator of [lo, hi].
struct FunctionSpec {
  enum class Kind { polynomial, indicator } kind = Kind::polynomial;
  std::vector<double> coeffs{0.0, 1.0};
  double lo = 0.0;
  double hi = 0.0;

  double operator()(double x) const;
  static FunctionSpec identity() { return {}; }
  static FunctionSpec polynomial(std::vector<double> c) { return {Kind::polynomial, std::move(c), 0, 0}; }
  static FunctionSpec indicator(double lo, double hi) { return {Kind::indicator, {}, lo, hi}; }
  std::string describe() const;
  bool operator==(const FunctionSpec&) const = default;
};

struct MeasurementPlan {
  std::size_t measured = 0;  ///< particle found at xbar at t1; the other is observed at t2
  double t1 = 1.0;
  double t2 = 2.0;
  FunctionSpec f;            ///< applied to the outcome xbar
  FunctionSpec g;            ///< applied to the observed particle at t2
  bool collapse = true;

  void validate() const;
};

struct TwoTimeConfig {
  quantum::CatalogParams params;  ///< two_particle_gaussian parameters
  double grid_half_width = 5.0;   ///< oracle grid [-h, h) on both axes
  std::size_t grid_points = 384;
  double oracle_dt = 0.01;
  double window_cells = 2.0;      ///< regularization width in grid cells
  std::size_t strata = 64;
  std::size_t n_traj = 100000;
  double dt = 1e-3;
  std::size_t threads = 0;
  double control_rate = 0.0;      ///< drift -gamma x of the linear control; 0 means omega
  bool width_check = true;
  bool control = true;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct TwoTimeResult {
  double width = 0.0;
  double quantum = 0.0;              ///< split-step oracle with the regularized collapse
  double quantum_closed_form = 0.0;  ///< same quantity from the Gaussian closed form
  Estimate stochastic;
  std::size_t escaped = 0;
};

/// Quantum and stochastic two-time expectations for one plan.
TwoTimeResult two_time_expectation(const MeasurementPlan& plan, const TwoTimeConfig& cfg,
                                   std::uint64_t seed);

/// Everything the measurement report needs, sharing one oracle evaluation.
struct TwoTimeStudy {
  MeasurementPlan plan;
  double width = 0.0;
  double quantum = 0.0;
  double quantum_closed_form = 0.0;
  Estimate on;   ///< collapse on
  Estimate off;  ///< collapse off
  /// Width-stability check at half the window width (NaN when disabled).
  double quantum_half_width = std::numeric_limits<double>::quiet_NaN();
  Estimate on_half_width{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  bool width_stable = true;
  /// Density-independent drift -gamma x: collapse pipeline vs plain joint run.
  Estimate control_on{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  Estimate control_off{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  /// E[f(x_k) g(x_other)] at t1 without any window.
  double equal_time_correlator = 0.0;
  std::size_t escaped = 0;
};

TwoTimeStudy two_time_study(const MeasurementPlan& plan, const TwoTimeConfig& cfg,
                            std::uint64_t seed);

/// The two-particle system as a Gaussian state starting at t = 0.
quantum::GaussianState2D two_particle_system(const quantum::CatalogParams& p);

}  // namespace stochmech::harness
