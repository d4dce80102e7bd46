#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stochmech/process/samplers.hpp"
#include "stochmech/quantum/catalog.hpp"
#include "stochmech/sde/ensemble.hpp"

namespace stochmech::process {

enum class Kind { nelson_white, colored_smoothing, phase_space, phase_space_multi };

Kind parse_kind(std::string_view name);
std::string_view kind_name(Kind k);

/// Run parameters common to every simulator.
struct RunConfig {
  sde::IntegratorConfig integrator;
  std::size_t n_traj = 10000;
  std::uint64_t seed = 1;
  sde::RecordPlan plan;
  sde::RunOptions options;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  /// Escaped fraction above which the run fails.
  double max_escape_fraction = 1e-3;
};

/// dx = b dt + eps dW.
sde::TrajectoryEnsemble simulate_nelson(std::shared_ptr<const sde::PositionField> drift,
                                        std::shared_ptr<const sde::InitialSampler> rho0,
                                        double eps, const RunConfig& run);

/// dx = b dt + eps A dt, A stationary OU with rate beta, independent of x(0).
sde::TrajectoryEnsemble simulate_colored_smoothing(std::shared_ptr<const sde::PositionField> drift,
                                                   std::shared_ptr<const sde::InitialSampler> rho0,
                                                   double eps, double beta, const RunConfig& run);

/// dx = v dt + eps A dt, dv = a(x) dt.
sde::TrajectoryEnsemble simulate_phase_space(std::shared_ptr<const sde::PositionField> accel,
                                             std::shared_ptr<const sde::InitialSampler> init,
                                             double eps, double beta, const RunConfig& run);

/// n-particle phase-space process with independent noise per particle.
sde::TrajectoryEnsemble simulate_phase_space_multi(
    std::shared_ptr<const sde::PositionField> accels,
    std::shared_ptr<const sde::InitialSampler> init, std::vector<double> eps,
    std::vector<double> betas, const RunConfig& run);

/// Throws SimulationError when more than the allowed fraction escaped.
void enforce_escape_budget(const sde::TrajectoryEnsemble& ens, double max_fraction);

/// Closed-form catalog drift b(x, t) as a one-particle field.
std::shared_ptr<sde::PositionField> analytic_drift(
    std::shared_ptr<const quantum::AnalyticState1D> state);

/// a(x) = -(1/m) dU/dx for the catalog potentials (harmonic or free).
std::shared_ptr<sde::PositionField> catalog_acceleration(const quantum::CatalogParams& p,
                                                         std::string_view state);

/// Piecewise-constant step at t_switch from K_before to K_after (row-major
/// P x P acceleration matrices), optionally ramped linearly over `ramp`.
std::shared_ptr<sde::PositionField> switched_linear_field(std::vector<double> k_before,
                                                          std::vector<double> k_after,
                                                          double t_switch, double ramp = 0.0);

/// eps = sqrt(hbar / m).
double nelson_eps(double hbar, double mass);

/// High-level description used by the harness and the CLI.
struct ProcessSpec {
  Kind kind = Kind::nelson_white;
  std::string state = "ho_ground";
  quantum::CatalogParams params;
  double beta = 100.0;
  VelocityInitProfile profile;
};

/// One-particle catalog runs for every kind except phase_space_multi.
sde::TrajectoryEnsemble run_catalog_process(const ProcessSpec& spec, const RunConfig& run);

}  // namespace stochmech::process
