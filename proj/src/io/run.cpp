#include "stochmech/io/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "stochmech/errors.hpp"
#include "stochmech/estimators/derivatives.hpp"
#include "stochmech/field/modes.hpp"
#include "stochmech/field/spectrum.hpp"
#include "stochmech/harness/decoupling.hpp"
#include "stochmech/harness/distance.hpp"
#include "stochmech/harness/measurement.hpp"
#include "stochmech/harness/ou_law.hpp"
#include "stochmech/harness/sweep.hpp"
#include "stochmech/io/csv.hpp"
#include "stochmech/process/simulators.hpp"
#include "stochmech/sde/parallel.hpp"
#include "stochmech/simd/kernels.hpp"

namespace stochmech::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStaging = ".partial";

// Collects the outputs of one run in the staging directory.
class Sink {
 public:
  Sink(fs::path staging, std::string hash) : staging_(std::move(staging)), hash_(std::move(hash)) {}

  void csv(const std::string& name, ColumnarOutput table) {
    table.spec_hash = hash_;
    write_csv(staging_ / name, table);
    names_.push_back(name);
  }
  void json_file(const std::string& name, json j) {
    j["spec_hash"] = hash_;
    write_text(name, j.dump(2) + "\n");
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(staging_ / name, std::ios::binary);
    f << text;
    if (!f) throw SimulationError("io", "write failed: " + (staging_ / name).string());
    names_.push_back(name);
  }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& hash() const { return hash_; }

 private:
  fs::path staging_;
  std::string hash_;
  std::vector<std::string> names_;
};

std::vector<double> iota_values(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
  return v;
}

json estimate_json(double value, double stderr_) { return {{"value", value}, {"stderr", stderr_}}; }

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
};

Moments sample_moments(std::span<const double> xs) {
  Moments m;
  double n = 0.0;
  for (double x : xs)
    if (std::isfinite(x)) {
      m.mean += x;
      n += 1.0;
    }
  if (n < 2.0) return m;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs)
    if (std::isfinite(x)) {
      const double d = (x - m.mean) * (x - m.mean);
      m2 += d;
      m4 += d * d;
    }
  m.variance = m2 / (n - 1.0);
  m.variance_stderr = std::sqrt(std::max(0.0, m4 / n - (m2 / n) * (m2 / n)) / n);
  return m;
}

std::pair<double, double> density_moments(const quantum::ScalarField& f) {
  double mass = 0.0, mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    const double w = (i == 0 || i + 1 == f.grid.n ? 0.5 : 1.0) * f.grid.dx * f.values[i];
    const double x = f.grid.x(i);
    mass += w;
    mean += w * x;
    second += w * x * x;
  }
  mean /= mass;
  return {mean, second / mass - mean * mean};
}

ColumnarOutput field_table(const estimators::DerivativeField& d,
                           const std::function<double(double)>& reference, const char* ref_name,
                           const char* unit) {
  ColumnarOutput t;
  std::vector<double> x, val, se, cnt, rel, ref;
  for (std::size_t j = 0; j < d.bins.count; ++j) {
    if (d.count[j] == 0) continue;
    x.push_back(d.x_mean[j]);
    val.push_back(d.estimate[j]);
    se.push_back(d.stderr_[j]);
    cnt.push_back(static_cast<double>(d.count[j]));
    rel.push_back(d.reliable[j] ? 1.0 : 0.0);
    ref.push_back(reference(d.x_mean[j]));
  }
  t.add_column("x", "length", std::move(x));
  t.add_column("value", unit, std::move(val));
  t.add_column("stderr", unit, std::move(se));
  t.add_column("count", "1", std::move(cnt));
  t.add_column("reliable", "1", std::move(rel));
  t.add_column(ref_name, unit, std::move(ref));
  return t;
}

ColumnarOutput grid_table(const quantum::ScalarField& f) {
  ColumnarOutput t;
  t.add_column("x", "length", f.grid.points());
  t.add_column("value", "1/length", f.values);
  return t;
}

sde::RecordPlan merge(sde::RecordPlan a, const sde::RecordPlan& b) {
  a.steps.insert(a.steps.end(), b.steps.begin(), b.steps.end());
  std::sort(a.steps.begin(), a.steps.end());
  a.steps.erase(std::unique(a.steps.begin(), a.steps.end()), a.steps.end());
  return a;
}

std::optional<estimators::Bins> spec_bins(const ExperimentSpec& s, std::span<const double> x) {
  if (s.estimator.bins == 0) return std::nullopt;
  const std::vector<double> qs{0.0005, 0.9995};
  const auto q = estimators::quantiles(x, qs);
  return estimators::Bins::uniform(q[0], q[1], s.estimator.bins);
}

// Trajectory table: t, traj_id, id column, x, v, A for the first trajectories.
ColumnarOutput trajectory_table(const sde::TrajectoryEnsemble& ens, std::size_t max_traj,
                                const char* id_column) {
  const std::size_t n = std::min(max_traj, ens.n_traj);
  std::vector<double> t, id, pid, x, v, a;
  for (std::size_t r = 0; r < ens.records(); ++r)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < ens.n_particles; ++p) {
        t.push_back(ens.times[r]);
        id.push_back(static_cast<double>(i));
        pid.push_back(static_cast<double>(p));
        x.push_back(ens.positions(r, p)[i]);
        v.push_back(ens.has_velocity() ? ens.velocities(r, p)[i] : std::nan(""));
        a.push_back(ens.has_noise() ? ens.noise(r, p)[i] : std::nan(""));
      }
  ColumnarOutput out;
  out.add_column("t", "time", std::move(t));
  out.add_column("traj_id", "1", std::move(id));
  out.add_column(id_column, "1", std::move(pid));
  out.add_column(id_column == std::string("mode_id") ? "q" : "x", "length", std::move(x));
  out.add_column("v", "length/time", std::move(v));
  out.add_column("A", "1/sqrt(time)", std::move(a));
  return out;
}

process::RunConfig run_config(const ExperimentSpec& s, sde::RecordPlan plan) {
  process::RunConfig rc;
  rc.integrator = sde::IntegratorConfig{s.dt, s.n_steps()};
  rc.n_traj = s.n_traj;
  rc.seed = s.seed;
  rc.plan = std::move(plan);
  rc.options.threads = s.threads;
  return rc;
}

bool has_record(const sde::TrajectoryEnsemble& ens, double t) {
  try {
    ens.time_index(t);
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

// ---------------------------------------------------------------- simulate

json run_simulate(const ExperimentSpec& s, Sink& out) {
  const auto params = s.constants.catalog();
  const auto kind = process::parse_kind(s.process);
  process::ProcessSpec ps{kind, s.state, params, s.betas.empty() ? 0.0 : s.betas[0], s.velocity_profile};
  if (kind == process::Kind::nelson_white) ps.beta = 1.0;
  const double delta = s.estimator.delta;
  sde::IntegratorConfig ic{s.dt, s.n_steps()};
  const auto checkpoints = s.resolved_checkpoints();
  std::vector<double> times;
  for (double t : checkpoints) {
    times.push_back(t);
    if (t - delta >= -1e-12 && t + delta <= s.horizon + 1e-12) {
      times.push_back(t - delta);
      times.push_back(t + delta);
    }
  }
  const auto stride_plan = sde::RecordPlan::every(ic.n_steps, s.trajectories.record_stride);
  auto rc = run_config(s, merge(stride_plan, sde::RecordPlan::at_times(ic, times)));
  const auto ens = process::run_catalog_process(ps, rc);
  const auto state = quantum::make_analytic(s.state, params);

  out.csv("trajectories.csv", trajectory_table(ens, s.trajectories.trajectories, "particle_id"));

  json cps = json::array(), derivs = json::array();
  for (double t : checkpoints) {
    const std::string tag = time_tag(t);
    const std::size_t rec = ens.time_index(t);
    const auto oracle = harness::oracle_marginal(*state, t, s.estimator.grid_points);
    const auto emp = harness::empirical_marginal(ens.positions(rec), oracle.grid, s.estimator.groups,
                                                 s.estimator.bandwidth);
    out.csv("density_" + tag + ".csv", grid_table(emp.density));
    out.csv("oracle_density_" + tag + ".csv", grid_table(oracle));
    const auto l1 = harness::marginal_distance(emp, oracle, harness::Metric::l1);
    const auto w1 = harness::marginal_distance(emp, oracle, harness::Metric::w1);
    const auto mom = sample_moments(ens.positions(rec));
    const auto [omean, ovar] = density_moments(oracle);
    cps.push_back({{"t", t},
                   {"l1", estimate_json(l1.value, l1.stderr_)},
                   {"w1", estimate_json(w1.value, w1.stderr_)},
                   {"mean", mom.mean},
                   {"variance", estimate_json(mom.variance, mom.variance_stderr)},
                   {"oracle_mean", omean},
                   {"oracle_variance", ovar},
                   {"bandwidth", emp.bandwidth}});

    if (!has_record(ens, t - delta) || !has_record(ens, t + delta) || t - delta < 0.0) continue;
    estimators::DerivativeSettings ds;
    ds.delta = delta;
    ds.bins = spec_bins(s, ens.positions(rec));
    ds.n_min = s.estimator.n_min;
    ds.groups = s.estimator.groups;
    ds.threads = s.threads;
    const auto fwd = estimators::forward_derivative(ens, t, ds);
    const auto bwd = estimators::backward_derivative(ens, t, ds);
    const auto acc = estimators::stochastic_acceleration(ens, t, ds);
    auto b = [&](double x) { return state->drift(x, t); };
    auto bstar = [&](double x) { return 2.0 * state->current_velocity(x, t) - state->drift(x, t); };
    auto force = [&](double x) { return harness::catalog_force(params, s.state, x); };
    out.csv("drift_forward_" + tag + ".csv", field_table(fwd, b, "oracle", "length/time"));
    out.csv("drift_backward_" + tag + ".csv", field_table(bwd, bstar, "oracle", "length/time"));
    out.csv("acceleration_" + tag + ".csv", field_table(acc.symmetric, force, "force", "length/time^2"));
    const auto res = estimators::newton_nelson_residual(acc.symmetric, force);
    const auto fit = estimators::fit_line(acc.symmetric);
    const auto dist_f = estimators::weighted_distance(fwd, b);
    const auto dist_b = estimators::weighted_distance(bwd, bstar);
    derivs.push_back({{"t", t},
                      {"residual_norm", res.norm},
                      {"residual_norm_stderr", res.norm_stderr},
                      {"residual_pooled_stderr", res.pooled_stderr},
                      {"acceleration_slope", estimate_json(fit.slope, fit.slope_stderr)},
                      {"acceleration_intercept", estimate_json(fit.intercept, fit.intercept_stderr)},
                      {"forward_drift_distance", estimate_json(dist_f.norm, dist_f.pooled_stderr)},
                      {"backward_drift_distance", estimate_json(dist_b.norm, dist_b.pooled_stderr)}});
  }
  return {{"state", s.state},
          {"process", s.process},
          {"beta", kind == process::Kind::nelson_white ? json(nullptr) : json(ps.beta)},
          {"eps", s.constants.resolved_eps()},
          {"n_traj", s.n_traj},
          {"escaped", ens.invalid_count},
          {"checkpoints", cps},
          {"derivatives", derivs}};
}

// ------------------------------------------------------------------ ou_law

json run_ou_law(const ExperimentSpec& s, Sink& out) {
  ColumnarOutput table;
  std::vector<std::vector<double>> cols(11);
  json rows = json::array();
  for (double beta : s.betas) {
    harness::OuLawConfig cfg;
    cfg.dt = s.dt;
    cfg.duration = s.horizon;
    cfg.paths = s.n_traj;
    cfg.groups = s.estimator.groups;
    cfg.threads = s.threads;
    const auto r = harness::ou_law(beta, cfg, s.seed);
    const double expected = 0.5 * beta;
    const double vals[] = {beta,        r.dt,           r.duration,         r.effective_samples,
                           r.variance,  r.variance_stderr, expected,        r.amplitude,
                           r.amplitude_stderr, r.decay_rate, r.decay_rate_stderr};
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(vals[c]);
    ColumnarOutput ac;
    ac.add_column("lag", "time", r.lag);
    ac.add_column("value", "1/time", r.autocovariance);
    ac.add_column("stderr", "1/time", r.autocovariance_stderr);
    ac.add_column("oracle", "1/time", r.oracle);
    out.csv("autocovariance_beta" + format_number(beta) + ".csv", ac);
    rows.push_back({{"beta", beta},
                    {"dt", r.dt},
                    {"duration", r.duration},
                    {"paths", r.paths},
                    {"effective_samples", r.effective_samples},
                    {"variance", estimate_json(r.variance, r.variance_stderr)},
                    {"expected_variance", expected},
                    {"variance_rel_error", r.variance / expected - 1.0},
                    {"amplitude", estimate_json(r.amplitude, r.amplitude_stderr)},
                    {"amplitude_over_beta", r.amplitude / beta},
                    {"decay_rate", estimate_json(r.decay_rate, r.decay_rate_stderr)},
                    {"decay_rel_error", r.decay_rate / beta - 1.0}});
  }
  const char* names[] = {"beta", "dt", "duration", "effective_samples", "variance", "variance_stderr",
                         "expected_variance", "amplitude", "amplitude_stderr", "decay_rate",
                         "decay_rate_stderr"};
  const char* units[] = {"1/time", "time", "time", "1", "1/time", "1/time",
                         "1/time", "1/time", "1/time", "1/time", "1/time"};
  for (std::size_t c = 0; c < cols.size(); ++c) table.add_column(names[c], units[c], cols[c]);
  out.csv("ou_law.csv", table);
  return {{"rows", rows},
          {"convention",
           "dA = -beta A dt + beta dW: stationary autocovariance (beta/2) exp(-beta |s|). The fitted "
           "amplitude is half of beta (amplitude_over_beta ~ 0.5) and the exponent is negative; an "
           "amplitude of beta or a growing exponential is not what this process produces."}};
}

// -------------------------------------------------------------- beta_sweep

json run_sweep(const ExperimentSpec& s, Sink& out) {
  harness::SweepConfig cfg;
  cfg.params = s.constants.catalog();
  cfg.profile = s.velocity_profile;
  cfg.horizon = s.horizon;
  cfg.dt = s.dt;
  cfg.n_traj = s.n_traj;
  cfg.delta = s.estimator.delta;
  cfg.groups = s.estimator.groups;
  cfg.grid_points = s.estimator.grid_points;
  cfg.threads = s.threads;
  const auto rep = harness::run_beta_sweep(s.state, process::parse_kind(s.process), s.betas, cfg, s.seed);

  ColumnarOutput t;
  auto col = [&](const char* name, const char* unit, auto get) {
    std::vector<double> v;
    for (const auto& r : rep.rows) v.push_back(get(r));
    t.add_column(name, unit, std::move(v));
  };
  using Row = harness::SweepRow;
  col("beta", "1/time", [](const Row& r) { return r.beta; });
  col("dt", "time", [](const Row& r) { return r.dt; });
  col("l1", "1", [](const Row& r) { return r.l1.value; });
  col("l1_stderr", "1", [](const Row& r) { return r.l1.stderr_; });
  col("w1", "length", [](const Row& r) { return r.w1.value; });
  col("w1_stderr", "length", [](const Row& r) { return r.w1.stderr_; });
  col("residual_norm", "length/time^2", [](const Row& r) { return r.residual_norm; });
  col("residual_norm_stderr", "length/time^2", [](const Row& r) { return r.residual_norm_stderr; });
  col("residual_pooled_stderr", "length/time^2", [](const Row& r) { return r.residual_pooled_stderr; });
  col("drift_mismatch", "length/time", [](const Row& r) { return r.drift_mismatch; });
  col("drift_mismatch_stderr", "length/time", [](const Row& r) { return r.drift_mismatch_stderr; });
  col("drift_mismatch_pooled_stderr", "length/time",
      [](const Row& r) { return r.drift_mismatch_pooled_stderr; });
  col("escaped", "1", [](const Row& r) { return static_cast<double>(r.escaped); });
  out.csv("sweep.csv", t);

  json trends = json::array();
  for (const auto& tr : rep.trends)
    trends.push_back({{"metric", tr.metric},
                      {"steps", tr.steps},
                      {"resolved_decreases", tr.resolved_decreases},
                      {"resolved_increases", tr.resolved_increases},
                      {"non_increasing", tr.non_increasing()}});
  std::size_t escaped = 0;
  json rows = json::array();
  for (const auto& r : rep.rows) {
    escaped += r.escaped;
    rows.push_back({{"beta", r.beta},
                    {"l1", estimate_json(r.l1.value, r.l1.stderr_)},
                    {"w1", estimate_json(r.w1.value, r.w1.stderr_)},
                    {"residual_norm", estimate_json(r.residual_norm, r.residual_norm_stderr)},
                    {"residual_pooled_stderr", r.residual_pooled_stderr},
                    {"drift_mismatch", estimate_json(r.drift_mismatch, r.drift_mismatch_stderr)},
                    {"escaped", r.escaped}});
  }
  return {{"state", rep.state},
          {"process", process::kind_name(rep.kind)},
          {"n_traj", rep.n_traj},
          {"dt", rep.dt},
          {"horizon", rep.horizon},
          {"quantum_force_norm", rep.quantum_force_norm},
          {"escaped", escaped},
          {"rows", rows},
          {"trends", trends},
          {"trend_separation_stderr", harness::kTrendSeparation}};
}

// -------------------------------------------------------- two-time measure

json run_measure(const ExperimentSpec& s, Sink& out) {
  const auto& m = s.measurement;
  harness::MeasurementPlan plan{m.measured, m.t1, m.t2, m.f, m.g, m.collapse};
  harness::TwoTimeConfig cfg;
  cfg.params = s.constants.catalog();
  cfg.grid_half_width = m.grid_half_width;
  cfg.grid_points = m.grid_points;
  cfg.oracle_dt = m.oracle_dt;
  cfg.window_cells = m.window_cells;
  cfg.strata = m.strata;
  cfg.n_traj = s.n_traj;
  cfg.dt = s.dt;
  cfg.threads = s.threads;
  cfg.control_rate = m.control_rate;
  cfg.width_check = m.width_check;
  cfg.control = m.control;
  const auto st = harness::two_time_study(plan, cfg, s.seed);

  const double nan = std::nan("");
  struct Variant {
    const char* name;
    harness::Estimate e;
    double oracle;
  };
  const Variant vs[] = {{"collapse_on", st.on, st.quantum},
                        {"collapse_off", st.off, st.quantum},
                        {"collapse_on_half_width", st.on_half_width, st.quantum_half_width},
                        {"control_on", st.control_on, nan},
                        {"control_off", st.control_off, nan}};
  ColumnarOutput t;
  std::vector<double> id, val, se, orc;
  json variants = json::object();
  for (std::size_t i = 0; i < std::size(vs); ++i) {
    id.push_back(static_cast<double>(i));
    val.push_back(vs[i].e.value);
    se.push_back(vs[i].e.stderr_);
    orc.push_back(vs[i].oracle);
    variants[vs[i].name] = {{"variant_id", i},
                            {"value", vs[i].e.value},
                            {"stderr", vs[i].e.stderr_},
                            {"oracle", vs[i].oracle},
                            {"z", (vs[i].e.value - vs[i].oracle) / vs[i].e.stderr_}};
  }
  t.add_column("variant_id", "1", std::move(id));
  t.add_column("value", "1", std::move(val));
  t.add_column("stderr", "1", std::move(se));
  t.add_column("oracle", "1", std::move(orc));
  out.csv("measurement.csv", t);
  const double ctrl_se = std::hypot(st.control_on.stderr_, st.control_off.stderr_);
  return {{"f", m.f.describe()},
          {"g", m.g.describe()},
          {"t1", m.t1},
          {"t2", m.t2},
          {"measured", m.measured},
          {"window_width", st.width},
          {"quantum", st.quantum},
          {"quantum_closed_form", st.quantum_closed_form},
          {"quantum_half_width", st.quantum_half_width},
          {"width_stable", st.width_stable},
          {"equal_time_correlator", st.equal_time_correlator},
          {"variants", variants},
          {"on_off_separation_z", (st.on.value - st.off.value) / std::hypot(st.on.stderr_, st.off.stderr_)},
          {"control_separation_z", (st.control_on.value - st.control_off.value) / ctrl_se},
          {"escaped", st.escaped},
          {"variant_order", {"collapse_on", "collapse_off", "collapse_on_half_width", "control_on", "control_off"}}};
}

// -------------------------------------------------------------- decoupling

json run_decoupling(const ExperimentSpec& s, Sink& out) {
  harness::DecouplingSpec d;
  const auto& kb = s.decoupling.k_before;
  const auto& ka = s.decoupling.k_after;
  d.k_before << kb[0], kb[1], kb[2], kb[3];
  d.k_after << ka[0], ka[1], ka[2], ka[3];
  d.hbar = s.constants.hbar;
  d.mass = s.constants.mass;
  d.beta = s.betas.at(0);
  d.profile = s.velocity_profile;
  d.horizon = s.horizon;
  d.dt = s.dt;
  d.record_stride = s.trajectories.record_stride;
  d.n_traj = s.n_traj;
  d.swap_noise = s.decoupling.swap_noise;
  d.threads = s.threads;
  const auto r = harness::decoupling_experiment(d, s.seed);
  ColumnarOutput t;
  t.add_column("t", "time", r.times);
  t.add_column("mean1", "length", r.mean1);
  t.add_column("mean2", "length", r.mean2);
  t.add_column("var1", "length^2", r.var1);
  t.add_column("var2", "length^2", r.var2);
  t.add_column("cov12", "length^2", r.cov12);
  t.add_column("cov12_stderr", "length^2", r.cov12_stderr);
  t.add_column("var1_oracle", "length^2", r.var1_oracle);
  t.add_column("var2_oracle", "length^2", r.var2_oracle);
  t.add_column("cov12_oracle", "length^2", r.cov12_oracle);
  out.csv("decoupling.csv", t);
  double max_z = 0.0;
  for (std::size_t i = 0; i < r.times.size(); ++i)
    max_z = std::max(max_z, std::abs(r.cov12[i] - r.cov12_oracle[i]) / r.cov12_stderr[i]);
  return {{"beta", d.beta},
          {"records", r.times.size()},
          {"cov12_final", estimate_json(r.cov12.back(), r.cov12_stderr.back())},
          {"cov12_oracle_final", r.cov12_oracle.back()},
          {"cov12_max_abs_z", max_z},
          {"escaped", r.escaped}};
}

// ------------------------------------------------------------------- field

json run_field(const ExperimentSpec& s, Sink& out) {
  const auto modes = field::mode_basis(s.field.length, s.field.modes, s.field.field_mass);
  field::FieldRunSpec fs;
  fs.betas = s.betas;
  fs.hbar = s.constants.hbar;
  fs.profile = s.velocity_profile;
  const double delta = s.estimator.delta;
  sde::IntegratorConfig ic{s.dt, s.n_steps()};
  const double t_mid = ic.time_at(ic.n_steps / 2);
  // Per-mode lag min(delta, 0.1 / omega_i) on the step grid.
  std::vector<double> lags, probe_times{t_mid};
  for (double w : modes.omega) {
    const double steps = std::max(1.0, std::floor(std::min(delta, 0.1 / w) / s.dt + 1e-9));
    lags.push_back(steps * s.dt);
    probe_times.push_back(t_mid - lags.back());
    probe_times.push_back(t_mid + lags.back());
  }
  const auto rc = run_config(s, merge(sde::RecordPlan::every(ic.n_steps, s.trajectories.record_stride),
                                      sde::RecordPlan::at_times(ic, probe_times)));
  const auto ens = field::simulate_field_phase_space(modes, fs, rc);
  out.csv("modes.csv", trajectory_table(ens, s.trajectories.trajectories, "mode_id"));

  std::vector<double> xs(s.field.snapshot_points);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = s.field.length * static_cast<double>(i) / static_cast<double>(xs.size());
  const auto stride = sde::RecordPlan::every(ic.n_steps, s.trajectories.record_stride);
  for (std::size_t step : stride.steps) {
    const double t = ic.time_at(step);
    const std::size_t rec = ens.time_index(t);
    const auto snap = field::reconstruct_field(ens, modes, rec, 0, xs);
    ColumnarOutput ft;
    ft.add_column("traj_id", "1", std::vector<double>(xs.size(), 0.0));
    ft.add_column("x", "length", snap.x);
    ft.add_column("phi", "field", snap.phi);
    ft.add_column("V", "field/time", snap.V);
    out.csv("field_" + time_tag(t) + ".csv", ft);
  }

  const std::size_t last = ens.records() - 1;
  ColumnarOutput mv;
  std::vector<double> k, w, var, vse, ground;
  double worst = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto m = sample_moments(ens.positions(last, i));
    k.push_back(modes.k[i]);
    w.push_back(modes.omega[i]);
    var.push_back(m.variance);
    vse.push_back(m.variance_stderr);
    ground.push_back(s.constants.hbar / (2.0 * modes.omega[i]));
    worst = std::max(worst, std::abs(m.variance / ground.back() - 1.0));
  }
  mv.add_column("mode_id", "1", iota_values(modes.size()));
  mv.add_column("k", "1/length", k);
  mv.add_column("omega", "1/time", w);
  mv.add_column("variance", "field^2", var);
  mv.add_column("variance_stderr", "field^2", vse);
  mv.add_column("ground_variance", "field^2", ground);
  out.csv("mode_variance.csv", mv);

  const auto ratio = field::noise_covariance_ratio(ens, modes, last, 0.0, 0.5 * s.field.length);
  estimators::DerivativeSettings ds;
  ds.delta = delta;
  ds.n_min = s.estimator.n_min;
  ds.groups = s.estimator.groups;
  ds.threads = s.threads;
  const auto res = field::field_nn_residual(ens, modes, t_mid, ds, xs, lags);
  ColumnarOutput rt;
  rt.add_column("x", "length", xs);
  rt.add_column("residual", "field/time^2", res.probe_residual);
  out.csv("field_residual_" + time_tag(t_mid) + ".csv", rt);
  return {{"modes", modes.size()},
          {"length", s.field.length},
          {"field_mass", s.field.field_mass},
          {"variance_time", ens.times[last]},
          {"max_variance_rel_error", worst},
          {"noise_covariance_ratio",
           {{"x", 0.0}, {"x_prime", 0.5 * s.field.length}, {"ratio", ratio.ratio},
            {"stderr", ratio.stderr_}, {"kernel_ratio", ratio.kernel_ratio}}},
          {"residual",
           {{"t", t_mid}, {"norm", res.norm}, {"pooled_stderr", res.pooled_stderr},
            {"mode_lag", lags}, {"mode_norm", res.mode_norm},
            {"mode_pooled_stderr", res.mode_pooled_stderr}}},
          {"escaped", ens.invalid_count}};
}

// ---------------------------------------------------------------- spectrum

json run_spectrum(const ExperimentSpec& s, Sink& out) {
  const auto& sp = s.spectrum;
  const double eps = s.constants.resolved_eps(), xi = s.constants.xi, G = s.constants.G;
  ColumnarOutput t;
  std::vector<double> P, Pt;
  json rows = json::array();
  for (double k : sp.k) {
    P.push_back(field::gravitational_spectrum(k, sp.t, eps, xi, G));
    Pt.push_back(field::potential_spectrum(P.back(), k, G));
    rows.push_back({{"k", k}, {"t", sp.t}, {"P", P.back()}, {"P_potential", Pt.back()}});
  }
  t.add_column("k", "1/length", sp.k);
  t.add_column("t", "time", std::vector<double>(sp.k.size(), sp.t));
  t.add_column("P", "1", P);
  t.add_column("P_potential", "1", Pt);
  out.csv("spectrum.csv", t);
  json summary = {{"P", P.front()},
                  {"k", sp.k.front()},
                  {"t", sp.t},
                  {"eps", eps},
                  {"xi", xi},
                  {"G", G},
                  {"spectrum", rows}};
  if (sp.poisson_check && sp.t > 0.0) {
    const auto pc = field::spectral_poisson_check(
        [&](double k) { return field::gravitational_spectrum(k, sp.t, eps, xi, G); }, G, sp.points,
        sp.box_length, sp.realizations, sp.bands, s.seed);
    ColumnarOutput pt;
    pt.add_column("k_band", "1/length", pc.k_band);
    pt.add_column("measured", "1", pc.measured);
    pt.add_column("expected", "1", pc.expected);
    pt.add_column("ratio", "1", pc.ratio);
    pt.add_column("rel_stderr", "1", pc.rel_stderr);
    out.csv("poisson.csv", pt);
    summary["poisson"] = {{"points", sp.points},
                          {"box_length", sp.box_length},
                          {"realizations", sp.realizations},
                          {"max_rel_error", pc.max_rel_error}};
  }
  return summary;
}

json dispatch(const ExperimentSpec& s, Sink& out) {
  switch (s.kind) {
    case ExperimentKind::simulate: return run_simulate(s, out);
    case ExperimentKind::ou_law: return run_ou_law(s, out);
    case ExperimentKind::beta_sweep: return run_sweep(s, out);
    case ExperimentKind::two_time_expectation: return run_measure(s, out);
    case ExperimentKind::decoupling: return run_decoupling(s, out);
    case ExperimentKind::field_phase_space: return run_field(s, out);
    case ExperimentKind::spectrum: return run_spectrum(s, out);
  }
  throw InvalidArgument("run_experiment: unknown kind");
}

}  // namespace

std::string time_tag(double t) { return "t" + format_number(t); }

fs::path output_directory(const ExperimentSpec& spec) {
  if (!spec.output.empty()) return spec.output;
  fs::path root = "runs";
  if (const char* env = std::getenv("STOCHMECH_OUT"); env && *env) root = env;
  return root / (std::string(experiment_kind_name(spec.kind)) + "-" + spec_hash(spec).substr(0, 12));
}

RunResult run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  RunResult result;
  result.directory = output_directory(spec);
  const bool existed = fs::exists(result.directory);
  fs::create_directories(result.directory);
  const fs::path staging = result.directory / kStaging;
  fs::remove_all(staging);
  fs::create_directories(staging);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> moved;
  try {
    Sink sink(staging, spec_hash(spec));
    // Placement fields (output, threads) go to run_info.json only.
    auto content = to_json(spec);
    content.erase("output");
    content.erase("threads");
    sink.write_text("spec.json", content.dump(2) + "\n");
    json summary = dispatch(spec, sink);
    summary["kind"] = experiment_kind_name(spec.kind);
    summary["seed"] = spec.seed;
    std::vector<std::string> files = sink.names();
    files.push_back("summary.json");
    std::sort(files.begin(), files.end());
    summary["files"] = files;
    sink.json_file("summary.json", summary);
    summary["spec_hash"] = sink.hash();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& name : sink.names()) {
      fs::rename(staging / name, result.directory / name);
      moved.push_back(name);
    }
    fs::remove_all(staging);
    json info = {{"spec_hash", sink.hash()},
                 {"wall_seconds", result.wall_seconds},
                 {"threads", resolve_threads(spec.threads)},
                 {"output", result.directory.string()},
                 {"simd_backend", simd::backend_name(simd::active_backend())},
                 {"files", files}};
    std::ofstream(result.directory / "run_info.json", std::ios::binary) << info.dump(2) << "\n";
    result.files = std::move(files);
    result.summary = std::move(summary);
  } catch (...) {
    std::error_code ec;
    for (const auto& name : moved) fs::remove(result.directory / name, ec);
    fs::remove_all(staging, ec);
    if (!existed) fs::remove(result.directory, ec);  // only succeeds when empty
    throw;
  }
  return result;
}

}  // namespace stochmech::io
