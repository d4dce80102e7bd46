#include "stochmech/sde/integrator.hpp"

#include <cmath>
#include <sstream>

#include "stochmech/errors.hpp"

namespace stochmech::sde {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("integrator: dt must be > 0");
}

void IntegratorConfig::validate_with_beta(double beta) const {
  validate();
  if (!(beta > 0.0)) throw InvalidArgument("integrator: beta must be > 0");
  if (dt * beta > kMaxDtBeta * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "resolution rule dt*beta <= " << kMaxDtBeta << " violated (dt=" << dt
       << ", beta=" << beta << ", dt*beta=" << dt * beta << ")";
    throw ConfigError(os.str());
  }
}

std::vector<double> wiener_increments(NoiseStream& stream, std::size_t n, double dt) {
  if (n == 0) throw InvalidArgument("wiener_increments: n must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("wiener_increments: dt must be > 0");
  std::vector<double> out(n);
  const double s = std::sqrt(dt);
  for (double& w : out) w = s * stream.normal();
  return out;
}

OuStep ou_step(double beta, double dt, OuScheme scheme) {
  if (scheme == OuScheme::exact) {
    const double decay = std::exp(-beta * dt);
    return {decay, std::sqrt(0.5 * beta * (1.0 - std::exp(-2.0 * beta * dt)))};
  }
  return {1.0 - beta * dt, beta * std::sqrt(dt)};
}

std::vector<double> simulate_ou(double beta, double a0, const IntegratorConfig& cfg,
                                NoiseStream& stream, bool noise) {
  cfg.validate_with_beta(beta);
  const OuStep step = ou_step(beta, cfg.dt, cfg.ou_scheme);
  std::vector<double> path(cfg.n_steps + 1);
  path[0] = a0;
  double a = a0;
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    const double z = noise ? stream.normal() : 0.0;
    a = step.decay * a + step.scale * z;
    path[k + 1] = a;
  }
  return path;
}

Trajectory euler_maruyama(const std::function<double(double, double)>& drift, double diffusion,
                          double x0, const IntegratorConfig& cfg, NoiseStream& stream) {
  cfg.validate();
  if (!(diffusion >= 0.0)) throw InvalidArgument("euler_maruyama: diffusion must be >= 0");
  Trajectory tr;
  tr.values.reserve(cfg.n_steps + 1);
  tr.values.push_back(x0);
  const double sqrt_dt = std::sqrt(cfg.dt);
  double x = x0;
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    const double b = drift(x, cfg.time_at(k));
    const double dw = sqrt_dt * stream.normal();
    x = (x + b * cfg.dt) + diffusion * dw;
    if (!std::isfinite(x)) {
      tr.valid = false;
      tr.first_invalid_step = k + 1;
      break;
    }
    tr.values.push_back(x);
  }
  return tr;
}

}  // namespace stochmech::sde
