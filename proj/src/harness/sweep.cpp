#include "stochmech/harness/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "stochmech/errors.hpp"
#include "stochmech/quantum/madelung.hpp"

namespace stochmech::harness {

TrendVerdict trend(std::string metric, const std::vector<double>& value,
                   const std::vector<double>& se) {
  TrendVerdict v;
  v.metric = std::move(metric);
  for (std::size_t i = 1; i < value.size(); ++i) {
    const double d = value[i] - value[i - 1];
    const double s = std::hypot(se[i], se[i - 1]);
    if (!(std::abs(d) > kTrendSeparation * s)) {
      v.steps.emplace_back("unresolved");
    } else if (d < 0.0) {
      v.steps.emplace_back("decrease");
      ++v.resolved_decreases;
    } else {
      v.steps.emplace_back("increase");
      ++v.resolved_increases;
    }
  }
  return v;
}

estimators::DerivativeField conditional_field(std::span<const double> x, std::span<const double> f,
                                              const estimators::Bins& bins, std::size_t groups,
                                              std::size_t n_min) {
  if (x.size() != f.size()) throw InvalidArgument("conditional_field: size mismatch");
  if (groups < 2) throw InvalidArgument("conditional_field: need at least 2 groups");
  const std::size_t B = bins.count, G = groups;
  std::vector<double> sum(G * B, 0.0), sq(G * B, 0.0), sx(G * B, 0.0);
  std::vector<std::size_t> cnt(G * B, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(f[i])) continue;
    const std::size_t j = bins.locate(x[i]);
    if (j == estimators::Bins::npos) continue;
    const std::size_t k = (i % G) * B + j;
    sum[k] += f[i];
    sq[k] += f[i] * f[i];
    sx[k] += x[i];
    ++cnt[k];
  }
  estimators::DerivativeField out;
  out.bins = bins;
  out.groups = G;
  out.estimate.assign(B, std::numeric_limits<double>::quiet_NaN());
  out.stderr_.assign(B, std::numeric_limits<double>::quiet_NaN());
  out.count.assign(B, 0);
  out.reliable.assign(B, 0);
  out.x_mean.assign(B, std::numeric_limits<double>::quiet_NaN());
  out.replicates.assign(G * B, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < B; ++j) {
    double s = 0, q = 0, xs = 0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < G; ++g) {
      s += sum[g * B + j];
      q += sq[g * B + j];
      xs += sx[g * B + j];
      n += cnt[g * B + j];
    }
    out.count[j] = n;
    if (n == 0) continue;
    const double m = s / static_cast<double>(n);
    out.estimate[j] = m;
    out.x_mean[j] = xs / static_cast<double>(n);
    if (n > 1) {
      const double var = std::max(0.0, (q - s * m) / static_cast<double>(n - 1));
      out.stderr_[j] = std::sqrt(var / static_cast<double>(n));
    }
    out.reliable[j] = n >= n_min;
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t rest = n - cnt[g * B + j];
      if (rest > 0) out.replicates[g * B + j] = (s - sum[g * B + j]) / static_cast<double>(rest);
    }
  }
  return out;
}

double catalog_force(const quantum::CatalogParams& p, std::string_view state, double x) {
  if (state == "free_gaussian") return 0.0;
  if (state == "ho_ground" || state == "ho_coherent" || state == "ho_superposition_01")
    return -p.omega * p.omega * x;
  throw InvalidArgument("no one-particle force for state '" + std::string(state) + "'");
}

quantum::ScalarField oracle_marginal(const quantum::AnalyticState1D& s, double t,
                                     std::size_t points) {
  // Locate the support on a wide probe grid first.
  const double len = std::sqrt(s.hbar() / s.mass());
  const std::size_t np = 20001;
  const double half = 60.0 * len;
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const double x = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(np - 1);
    const double r = s.rho(x, t);
    m0 += r;
    m1 += r * x;
    m2 += r * x * x;
  }
  const double mean = m1 / m0;
  const double sd = std::sqrt(std::max(m2 / m0 - mean * mean, 1e-300));
  const double lo = mean - 8.0 * sd, hi = mean + 8.0 * sd;
  quantum::Grid1D g{lo, (hi - lo) / static_cast<double>(points - 1), points};
  quantum::ScalarField f{g, std::vector<double>(points), {}};
  for (std::size_t i = 0; i < points; ++i) f.values[i] = s.rho(g.x(i), t);
  const double mass = f.integral();
  for (double& v : f.values) v /= mass;
  return f;
}

namespace {

double quantum_force_norm(const quantum::ScalarField& rho, double mass, double hbar) {
  const auto Q = quantum::quantum_potential(rho, mass, hbar);
  const auto dQ = quantum::derivative(Q.values, Q.mask, rho.grid.dx, 1);
  std::vector<double> w(rho.grid.n, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (Q.valid(i) && std::isfinite(dQ[i])) w[i] = rho.values[i] * dQ[i] * dQ[i] / (mass * mass);
  return std::sqrt(quantum::trapezoid(w, rho.grid.dx));
}

}  // namespace

SweepReport run_beta_sweep(const std::string& state, process::Kind kind, std::vector<double> betas,
                           const SweepConfig& cfg, std::uint64_t seed) {
  if (kind != process::Kind::colored_smoothing && kind != process::Kind::phase_space)
    throw InvalidArgument("run_beta_sweep: kind must be colored_smoothing or phase_space");
  if (betas.empty()) throw InvalidArgument("run_beta_sweep: empty beta list");
  if (!std::is_sorted(betas.begin(), betas.end()))
    throw InvalidArgument("run_beta_sweep: betas must be sorted ascending");
  if (!(betas.front() > 0.0)) throw InvalidArgument("run_beta_sweep: betas must be positive");
  if (!(cfg.horizon > 0.0) || !(cfg.delta > 0.0) || cfg.delta >= cfg.horizon)
    throw InvalidArgument("run_beta_sweep: need 0 < delta < horizon");

  std::shared_ptr<const quantum::AnalyticState1D> st = quantum::make_analytic(state, cfg.params);
  const double dt = cfg.dt > 0.0 ? cfg.dt : sde::kMaxDtBeta / betas.back();

  SweepReport rep;
  rep.state = state;
  rep.kind = kind;
  rep.n_traj = cfg.n_traj;
  rep.dt = dt;
  rep.horizon = cfg.horizon;
  rep.seed = seed;
  const auto oracle = oracle_marginal(*st, cfg.horizon, cfg.grid_points);
  rep.quantum_force_norm = quantum_force_norm(oracle, cfg.params.mass, cfg.params.hbar);

  auto make_run = [&](double step) {
    process::RunConfig rc;
    const double t_end = cfg.horizon + cfg.delta;
    rc.integrator.dt = step;
    rc.integrator.n_steps = static_cast<std::size_t>(std::llround(t_end / step));
    rc.n_traj = cfg.n_traj;
    rc.seed = seed;
    rc.options.threads = cfg.threads;
    const std::vector<double> times{cfg.horizon - cfg.delta, cfg.horizon, t_end};
    rc.plan = sde::RecordPlan::at_times(rc.integrator, times);
    return rc;
  };

  for (double beta : betas) {
    process::ProcessSpec ps;
    ps.kind = kind;
    ps.state = state;
    ps.params = cfg.params;
    ps.beta = beta;
    ps.profile = cfg.profile;
    const auto rc = make_run(dt);
    const auto ens = process::run_catalog_process(ps, rc);

    SweepRow row;
    row.beta = beta;
    row.dt = dt;
    row.escaped = ens.invalid_count;
    const std::size_t rec = ens.time_index(cfg.horizon);
    const auto emp = empirical_marginal(ens.positions(rec), oracle.grid, cfg.groups);
    row.l1 = marginal_distance(emp, oracle, Metric::l1);
    row.w1 = marginal_distance(emp, oracle, Metric::w1);

    estimators::DerivativeSettings s;
    s.delta = cfg.delta;
    s.groups = cfg.groups;
    s.threads = cfg.threads;
    const auto acc = estimators::stochastic_acceleration(ens, cfg.horizon, s);
    const auto res = estimators::newton_nelson_residual(
        acc.symmetric, [&](double x) { return catalog_force(cfg.params, state, x); });
    row.residual_norm = res.norm;
    row.residual_norm_stderr = res.norm_stderr;
    row.residual_pooled_stderr = res.pooled_stderr;

    const double T = cfg.horizon;
    auto drift = [&](double x) { return st->drift(x, T); };
    estimators::ResidualReport mis;
    if (kind == process::Kind::phase_space) {
      const auto x = ens.positions(rec);
      const auto bins = estimators::freedman_diaconis(x);
      mis = estimators::newton_nelson_residual(
          conditional_field(x, ens.velocities(rec), bins, cfg.groups), drift);
    } else {
      mis = estimators::newton_nelson_residual(estimators::forward_derivative(ens, T, s), drift);
    }
    row.drift_mismatch = mis.norm;
    row.drift_mismatch_stderr = mis.norm_stderr;
    row.drift_mismatch_pooled_stderr = mis.pooled_stderr;

    if (cfg.dt_halving) {
      const auto half = process::run_catalog_process(ps, make_run(0.5 * dt));
      const auto e2 = empirical_marginal(half.positions(half.time_index(T)), oracle.grid, cfg.groups);
      row.l1_half_dt = marginal_distance(e2.density, oracle, Metric::l1);
    }
    rep.rows.push_back(row);
  }

  auto column = [&](auto get) {
    std::vector<double> v, e;
    for (const auto& r : rep.rows) {
      const auto [a, b] = get(r);
      v.push_back(a);
      e.push_back(b);
    }
    return std::pair{v, e};
  };
  auto add = [&](const char* name, auto get) {
    const auto [v, e] = column(get);
    rep.trends.push_back(trend(name, v, e));
  };
  add("distance_l1", [](const SweepRow& r) { return std::pair{r.l1.value, r.l1.stderr_}; });
  add("distance_w1", [](const SweepRow& r) { return std::pair{r.w1.value, r.w1.stderr_}; });
  add("residual_norm",
      [](const SweepRow& r) { return std::pair{r.residual_norm, r.residual_norm_stderr}; });
  add("drift_mismatch",
      [](const SweepRow& r) { return std::pair{r.drift_mismatch, r.drift_mismatch_stderr}; });
  return rep;
}

}  // namespace stochmech::harness
