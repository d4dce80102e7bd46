#include "stochmech/harness/ou_law.hpp"

#include <cmath>

#include "stochmech/errors.hpp"
#include "stochmech/harness/distance.hpp"
#include "stochmech/sde/integrator.hpp"
#include "stochmech/sde/parallel.hpp"

namespace stochmech::harness {
namespace {

struct LogFit {
  double amplitude = 0.0;
  double rate = 0.0;
};

LogFit log_fit(const std::vector<double>& s, const std::vector<double>& c) {
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(c[k] > 0.0)) continue;
    const double y = std::log(c[k]);
    n += 1.0;
    sx += s[k];
    sy += y;
    sxx += s[k] * s[k];
    sxy += s[k] * y;
  }
  if (n < 2.0) throw SimulationError("harness", "ou_law: autocovariance not positive at two lags");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {std::exp((sy - slope * sx) / n), -slope};
}

}  // namespace

OuLawReport ou_law(double beta, const OuLawConfig& cfg, std::uint64_t seed) {
  if (!(beta > 0.0)) throw InvalidArgument("ou_law: beta must be positive");
  if (cfg.paths < cfg.groups || cfg.groups < 2 || cfg.lags < 2)
    throw InvalidArgument("ou_law: need lags >= 2 and paths >= groups >= 2");
  OuLawReport r;
  r.beta = beta;
  r.dt = cfg.dt > 0.0 ? cfg.dt : sde::kMaxDtBeta / beta;
  r.duration = cfg.duration > 0.0 ? cfg.duration : 200.0 / beta;
  r.paths = cfg.paths;
  sde::IntegratorConfig ic{r.dt, static_cast<std::size_t>(std::llround(r.duration / r.dt))};
  ic.validate_with_beta(beta);
  r.effective_samples = static_cast<double>(cfg.paths) * r.duration * beta / 2.0;

  const double lag_span = cfg.max_lag / beta / r.dt / static_cast<double>(cfg.lags - 1);
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(lag_span)));
  if (stride * (cfg.lags - 1) >= ic.n_steps) throw InvalidArgument("ou_law: duration shorter than the lag range");
  const std::size_t L = cfg.lags;
  for (std::size_t k = 0; k < L; ++k) r.lag.push_back(static_cast<double>(k * stride) * r.dt);

  std::vector<double> per_path(cfg.paths * L);
  parallel_for(cfg.paths, cfg.threads, [&](std::size_t p) {
    sde::NoiseStream start(seed, p, sde::channel::colored_start(0));
    sde::NoiseStream dyn(seed, p, sde::channel::dynamics(0));
    const double a0 = std::sqrt(sde::ou_stationary_variance(beta)) * start.normal();
    const auto a = sde::simulate_ou(beta, a0, ic, dyn);
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t lag = k * stride, m = a.size() - lag;
      double c = 0.0;
      for (std::size_t i = 0; i < m; ++i) c += a[i] * a[i + lag];
      per_path[p * L + k] = c / static_cast<double>(m);
    }
  });

  // Group sums in path order, so the reduction does not depend on threads.
  const std::size_t G = cfg.groups;
  std::vector<double> gsum(G * L, 0.0), total(L, 0.0);
  std::vector<double> gcount(G, 0.0);
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    gcount[p % G] += 1.0;
    for (std::size_t k = 0; k < L; ++k) gsum[(p % G) * L + k] += per_path[p * L + k];
  }
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t k = 0; k < L; ++k) total[k] += gsum[g * L + k];
  const double n = static_cast<double>(cfg.paths);
  for (std::size_t k = 0; k < L; ++k) r.autocovariance.push_back(total[k] / n);

  std::vector<std::vector<double>> rep_c(L, std::vector<double>(G));
  std::vector<double> rep_amp(G), rep_rate(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> c(L);
    for (std::size_t k = 0; k < L; ++k) {
      c[k] = (total[k] - gsum[g * L + k]) / (n - gcount[g]);
      rep_c[k][g] = c[k];
    }
    const auto f = log_fit(r.lag, c);
    rep_amp[g] = f.amplitude;
    rep_rate[g] = f.rate;
  }
  for (std::size_t k = 0; k < L; ++k) {
    r.autocovariance_stderr.push_back(jackknife_stderr(rep_c[k]));
    r.oracle.push_back(0.5 * beta * std::exp(-beta * r.lag[k]));
  }
  r.variance = r.autocovariance[0];
  r.variance_stderr = r.autocovariance_stderr[0];
  const auto fit = log_fit(r.lag, r.autocovariance);
  r.amplitude = fit.amplitude;
  r.decay_rate = fit.rate;
  r.amplitude_stderr = jackknife_stderr(rep_amp);
  r.decay_rate_stderr = jackknife_stderr(rep_rate);
  return r;
}

}  // namespace stochmech::harness
