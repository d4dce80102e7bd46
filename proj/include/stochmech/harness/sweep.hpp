#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochmech/estimators/derivatives.hpp"
#include "stochmech/harness/distance.hpp"
#include "stochmech/process/simulators.hpp"

namespace stochmech::harness {

struct SweepConfig {
  quantum::CatalogParams params;
  process::VelocityInitProfile profile;
  double horizon = 1.0;        ///< time of the reported marginal
  double dt = 0.0;             ///< 0: 0.1 / max beta (the resolution rule)
  std::size_t n_traj = 100000;
  double delta = 0.1;          ///< lag of the stochastic derivatives
  std::size_t groups = 20;
  std::size_t grid_points = 512;
  bool dt_halving = false;     ///< rerun each beta at dt/2 for the L1 column
  std::size_t threads = 0;
};

struct SweepRow {
  double beta = 0.0;
  double dt = 0.0;
  DistanceEstimate l1;
  DistanceEstimate w1;
  double residual_norm = 0.0;
  double residual_norm_stderr = 0.0;
  double residual_pooled_stderr = 0.0;
  double drift_mismatch = 0.0;
  double drift_mismatch_stderr = 0.0;
  double drift_mismatch_pooled_stderr = 0.0;
  double l1_half_dt = std::numeric_limits<double>::quiet_NaN();
  std::size_t escaped = 0;
};

/// Step-by-step comparison of one column along increasing beta. A step is
/// resolved when the change exceeds kTrendSeparation combined errors.
struct TrendVerdict {
  std::string metric;
  std::vector<std::string> steps;  ///< "decrease", "increase" or "unresolved"
  std::size_t resolved_decreases = 0;
  std::size_t resolved_increases = 0;
  bool non_increasing() const { return resolved_increases == 0; }
};

inline constexpr double kTrendSeparation = 2.0;

struct SweepReport {
  std::string state;
  process::Kind kind = process::Kind::phase_space;
  std::size_t n_traj = 0;
  double dt = 0.0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  /// Density-weighted norm of the quantum-potential force -Q'/m at the horizon.
  double quantum_force_norm = 0.0;
  std::vector<SweepRow> rows;
  std::vector<TrendVerdict> trends;
};

TrendVerdict trend(std::string metric, const std::vector<double>& value,
                   const std::vector<double>& stderr_);

/// Binned E[f | x] as a derivative-style field with grouped replicates, so the
/// residual and distance helpers apply to it.
estimators::DerivativeField conditional_field(std::span<const double> x, std::span<const double> f,
                                              const estimators::Bins& bins, std::size_t groups,
                                              std::size_t n_min = estimators::kDefaultMinCount);

/// One-particle force -(1/m) dU/dx of a catalog state.
double catalog_force(const quantum::CatalogParams& p, std::string_view state, double x);

/// Oracle density of a catalog state at time t on a grid covering its support.
quantum::ScalarField oracle_marginal(const quantum::AnalyticState1D& s, double t,
                                     std::size_t points);

SweepReport run_beta_sweep(const std::string& state, process::Kind kind, std::vector<double> betas,
                           const SweepConfig& cfg, std::uint64_t seed);

}  // namespace stochmech::harness
