#include "stochmech/process/simulators.hpp"

#include <cmath>
#include <string>

#include "stochmech/errors.hpp"

namespace stochmech::process {

Kind parse_kind(std::string_view name) {
  if (name == "nelson_white") return Kind::nelson_white;
  if (name == "colored_smoothing") return Kind::colored_smoothing;
  if (name == "phase_space") return Kind::phase_space;
  if (name == "phase_space_multi") return Kind::phase_space_multi;
  throw InvalidArgument("unknown process kind '" + std::string(name) + "'");
}

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::nelson_white: return "nelson_white";
    case Kind::colored_smoothing: return "colored_smoothing";
    case Kind::phase_space: return "phase_space";
    case Kind::phase_space_multi: return "phase_space_multi";
  }
  return "?";
}

double nelson_eps(double hbar, double mass) {
  if (!(hbar > 0.0) || !(mass > 0.0)) throw ConfigError("eps = sqrt(hbar/m) needs hbar > 0 and m > 0");
  return std::sqrt(hbar / mass);
}

void enforce_escape_budget(const sde::TrajectoryEnsemble& ens, double max_fraction) {
  const double frac = static_cast<double>(ens.invalid_count) / static_cast<double>(ens.n_traj);
  if (frac > max_fraction)
    throw SimulationError("nelson-process", std::to_string(ens.invalid_count) + " of " +
                                                std::to_string(ens.n_traj) +
                                                " trajectories escaped the support or diverged");
}

namespace {

sde::TrajectoryEnsemble run(sde::ProcessModel model, const RunConfig& rc) {
  model.lower = rc.lower;
  model.upper = rc.upper;
  auto ens = sde::run_ensemble(model, rc.n_traj, rc.seed, rc.integrator, rc.plan, rc.options);
  enforce_escape_budget(ens, rc.max_escape_fraction);
  return ens;
}

}  // namespace

sde::TrajectoryEnsemble simulate_nelson(std::shared_ptr<const sde::PositionField> drift,
                                        std::shared_ptr<const sde::InitialSampler> rho0,
                                        double eps, const RunConfig& rc) {
  sde::ProcessModel m;
  m.eps = {eps};
  m.field = std::move(drift);
  m.init = std::move(rho0);
  return run(std::move(m), rc);
}

sde::TrajectoryEnsemble simulate_colored_smoothing(std::shared_ptr<const sde::PositionField> drift,
                                                   std::shared_ptr<const sde::InitialSampler> rho0,
                                                   double eps, double beta, const RunConfig& rc) {
  sde::ProcessModel m;
  m.driving = sde::Driving::colored;
  m.eps = {eps};
  m.beta = {beta};
  m.field = std::move(drift);
  m.init = std::move(rho0);
  return run(std::move(m), rc);
}

sde::TrajectoryEnsemble simulate_phase_space(std::shared_ptr<const sde::PositionField> accel,
                                             std::shared_ptr<const sde::InitialSampler> init,
                                             double eps, double beta, const RunConfig& rc) {
  return simulate_phase_space_multi(std::move(accel), std::move(init), {eps}, {beta}, rc);
}

sde::TrajectoryEnsemble simulate_phase_space_multi(
    std::shared_ptr<const sde::PositionField> accels,
    std::shared_ptr<const sde::InitialSampler> init, std::vector<double> eps,
    std::vector<double> betas, const RunConfig& rc) {
  if (!init || !init->provides_velocity())
    throw InvalidArgument("phase-space process: initial sampler must provide velocities");
  sde::ProcessModel m;
  m.dynamics = sde::Dynamics::phase_space;
  m.driving = sde::Driving::colored;
  m.eps = std::move(eps);
  m.beta = std::move(betas);
  m.field = std::move(accels);
  m.init = std::move(init);
  return run(std::move(m), rc);
}

std::shared_ptr<sde::PositionField> analytic_drift(
    std::shared_ptr<const quantum::AnalyticState1D> state) {
  if (!state) throw InvalidArgument("analytic_drift: null state");
  if (auto g = std::dynamic_pointer_cast<const quantum::GaussianState1D>(state)) {
    // b = (hbar/m)(Im + Re)(-a(t) x + c(t)) is affine in x.
    const double r = g->hbar() / g->mass();
    return std::make_shared<sde::LinearField>(
        1,
        [g, r](double t) {
          const auto a = g->a(t);
          return std::vector<double>{-r * (a.real() + a.imag())};
        },
        [g, r](double t) {
          const auto c = g->c(t);
          return std::vector<double>{r * (c.real() + c.imag())};
        });
  }
  return sde::CallableField::scalar([state](double x, double t) { return state->drift(x, t); });
}

std::shared_ptr<sde::PositionField> catalog_acceleration(const quantum::CatalogParams& p,
                                                         std::string_view state) {
  if (state == "free_gaussian") return sde::LinearField::constant({0.0});
  if (state == "ho_ground" || state == "ho_coherent" || state == "ho_superposition_01")
    return sde::LinearField::constant({-p.omega * p.omega});
  throw InvalidArgument("no one-particle acceleration for state '" + std::string(state) + "'");
}

std::shared_ptr<sde::PositionField> switched_linear_field(std::vector<double> k_before,
                                                          std::vector<double> k_after,
                                                          double t_switch, double ramp) {
  if (k_before.size() != k_after.size()) throw InvalidArgument("switched_linear_field: size mismatch");
  const auto p = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(k_after.size()))));
  if (p * p != k_after.size()) throw InvalidArgument("switched_linear_field: matrices must be square");
  if (ramp < 0.0) throw InvalidArgument("switched_linear_field: ramp must be >= 0");
  return std::make_shared<sde::LinearField>(
      p, [kb = std::move(k_before), ka = std::move(k_after), t_switch, ramp](double t) {
        if (t < t_switch) return kb;
        if (ramp == 0.0 || t >= t_switch + ramp) return ka;
        const double w = (t - t_switch) / ramp;
        std::vector<double> k(ka.size());
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = (1.0 - w) * kb[i] + w * ka[i];
        return k;
      });
}

sde::TrajectoryEnsemble run_catalog_process(const ProcessSpec& spec, const RunConfig& rc) {
  if (spec.kind == Kind::phase_space_multi)
    throw InvalidArgument("run_catalog_process: phase_space_multi needs an explicit multi-particle setup");
  std::shared_ptr<const quantum::AnalyticState1D> state =
      quantum::make_analytic(spec.state, spec.params);
  const double eps = nelson_eps(spec.params.hbar, spec.params.mass);
  const double t0 = rc.integrator.t0;
  auto rho0 = density_sampler(*state, t0);
  switch (spec.kind) {
    case Kind::nelson_white: return simulate_nelson(analytic_drift(state), rho0, eps, rc);
    case Kind::colored_smoothing:
      return simulate_colored_smoothing(analytic_drift(state), rho0, eps, spec.beta, rc);
    case Kind::phase_space: {
      auto init = construct_initial_phase_density(
          rho0, [state, t0](std::span<const double> x, std::span<double> v) { v[0] = state->drift(x[0], t0); },
          spec.profile);
      return simulate_phase_space(catalog_acceleration(spec.params, spec.state), init, eps, spec.beta, rc);
    }
    default: break;
  }
  throw InvalidArgument("run_catalog_process: unsupported kind");
}

}  // namespace stochmech::process
