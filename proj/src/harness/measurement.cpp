#include "stochmech/harness/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stochmech/errors.hpp"
#include "stochmech/process/samplers.hpp"
#include "stochmech/process/simulators.hpp"
#include "stochmech/quantum/split_step.hpp"
#include "stochmech/sde/parallel.hpp"

namespace stochmech::harness {

double ScalarField2D::integral() const {
  const std::size_t n = grid.n;
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i)
    row[i] = quantum::trapezoid(std::span<const double>(values.data() + i * n, n), grid.dx);
  return quantum::trapezoid(row, grid.dx);
}

quantum::ScalarField ScalarField2D::marginal(std::size_t axis) const {
  if (axis > 1) throw InvalidArgument("ScalarField2D: axis must be 0 or 1");
  const std::size_t n = grid.n;
  quantum::ScalarField m{grid, std::vector<double>(n), {}};
  std::vector<double> line(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) line[b] = axis == 0 ? values[a * n + b] : values[b * n + a];
    m.values[a] = quantum::trapezoid(line, grid.dx);
  }
  return m;
}

ScalarField2D collapse_density(const ScalarField2D& rho, double value, double width,
                               std::size_t particle) {
  const std::size_t n = rho.grid.n;
  if (rho.values.size() != n * n) throw InvalidArgument("collapse_density: size mismatch");
  if (particle > 1) throw InvalidArgument("collapse_density: particle must be 0 or 1");
  if (!(width > 0.0)) throw InvalidArgument("collapse_density: width must be positive");
  if (!(value >= rho.grid.x(0) && value <= rho.grid.back()))
    throw InvalidArgument("collapse_density: measured value outside the grid");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (rho.grid.x(i) - value) / width;
    w[i] = std::exp(-0.5 * z * z) / (width * std::sqrt(2.0 * std::numbers::pi));
  }
  const double wmass = quantum::trapezoid(w, rho.grid.dx);
  for (double& v : w) v /= wmass;
  // c(y) = int rho(x_k = s, y) w(s) ds.
  std::vector<double> c(n), line(n);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t a = 0; a < n; ++a)
      line[a] = w[a] * (particle == 0 ? rho.values[a * n + b] : rho.values[b * n + a]);
    c[b] = quantum::trapezoid(line, rho.grid.dx);
  }
  const double mass = quantum::trapezoid(c, rho.grid.dx);
  if (!(mass >= kMinWindowMass))
    throw DegenerateMeasurement("conditional mass " + std::to_string(mass) + " under the window at " +
                                std::to_string(value));
  ScalarField2D out{rho.grid, std::vector<double>(n * n)};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double v = w[a] * c[b] / mass;
      if (particle == 0)
        out.values[a * n + b] = v;
      else
        out.values[b * n + a] = v;
    }
  return out;
}

double FunctionSpec::operator()(double x) const {
  if (kind == Kind::indicator) return (x >= lo && x <= hi) ? 1.0 : 0.0;
  double r = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * x + *it;
  return r;
}

std::string FunctionSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind == Kind::indicator) {
    os << "indicator[" << lo << "," << hi << "]";
  } else {
    os << "poly[";
    for (std::size_t i = 0; i < coeffs.size(); ++i) os << (i ? "," : "") << coeffs[i];
    os << "]";
  }
  return os.str();
}

void MeasurementPlan::validate() const {
  if (measured > 1) throw InvalidArgument("measurement: measured particle must be 0 or 1");
  if (!(t1 >= 0.0)) throw InvalidArgument("measurement: t1 must be >= 0");
  if (!(t2 >= t1)) throw InvalidArgument("measurement: t2 must not precede t1");
  for (const auto* fn : {&f, &g})
    if (fn->kind == FunctionSpec::Kind::polynomial && fn->coeffs.empty())
      throw InvalidArgument("measurement: empty polynomial");
    else if (fn->kind == FunctionSpec::Kind::indicator && !(fn->hi > fn->lo))
      throw InvalidArgument("measurement: indicator needs lo < hi");
}

quantum::GaussianState2D two_particle_system(const quantum::CatalogParams& p) {
  const quantum::TwoParticleGaussian tp(p);  // validates the parameters
  return quantum::GaussianState2D(p.mass, p.hbar, p.omega, tp.M(0.0), Eigen::Vector2cd::Zero(), 0.0);
}

namespace {

constexpr std::size_t kMarginalPoints = 4001;

struct Setup {
  quantum::GaussianState2D sys;
  quantum::Grid1D grid;
  double width;
  std::size_t k;      // measured
  std::size_t o;      // observed
  quantum::Grid1D xg;  // outcome grid
  std::vector<double> rho_bar;
  std::shared_ptr<process::GridDensitySampler> outcome;
  std::vector<double> nodes;
};

Setup make_setup(const MeasurementPlan& plan, const TwoTimeConfig& cfg, double width_scale) {
  plan.validate();
  if (cfg.strata < 2) throw InvalidArgument("measurement: need at least 2 strata");
  if (cfg.grid_points < 16 || !(cfg.grid_half_width > 0.0))
    throw InvalidArgument("measurement: oracle grid too small");
  Setup s{two_particle_system(cfg.params), quantum::Grid1D::centered(cfg.grid_half_width, cfg.grid_points),
          0.0, plan.measured, 1 - plan.measured, {}, {}, nullptr, {}};
  s.width = width_scale * cfg.window_cells * s.grid.dx;
  const double mu = s.sys.mean(plan.t1)(s.k);
  const double sd = std::sqrt(s.sys.covariance(plan.t1)(s.k, s.k));
  s.xg = quantum::Grid1D{mu - 10.0 * sd, 20.0 * sd / (kMarginalPoints - 1), kMarginalPoints};
  s.rho_bar.resize(kMarginalPoints);
  for (std::size_t i = 0; i < kMarginalPoints; ++i) {
    const double z = (s.xg.x(i) - mu) / sd;
    s.rho_bar[i] = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  }
  s.outcome = std::make_shared<process::GridDensitySampler>(s.xg.points(), s.rho_bar);
  for (std::size_t j = 0; j < cfg.strata; ++j)
    s.nodes.push_back(s.outcome->quantile((static_cast<double>(j) + 0.5) / static_cast<double>(cfg.strata)));
  for (double v : s.nodes)
    if (!(v > s.grid.x(0) && v < s.grid.back()))
      throw DegenerateMeasurement("stratum node outside the oracle grid");
  for (double edge : {s.grid.x(0), s.grid.back()})
    if (!std::isfinite(plan.f(edge)) || !std::isfinite(plan.g(edge)))
      throw InvalidArgument("measurement: f and g must be finite on the grid support");
  return s;
}

// E[g] of the observed coordinate of a 2-D density.
double observed_mean(const Setup& s, const std::vector<double>& density, const FunctionSpec& g) {
  ScalarField2D d{s.grid, density};
  const auto m = d.marginal(s.o);
  std::vector<double> gm(m.values.size());
  for (std::size_t i = 0; i < gm.size(); ++i) gm[i] = g(s.grid.x(i)) * m.values[i];
  return quantum::trapezoid(gm, s.grid.dx) / quantum::trapezoid(m.values, s.grid.dx);
}

double gaussian_expectation(const FunctionSpec& g, double mean, double var) {
  const double sd = std::sqrt(var);
  const std::size_t n = 4001;
  const double h = 20.0 * sd / (n - 1);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = -10.0 + 20.0 * static_cast<double>(i) / (n - 1);
    v[i] = g(mean + sd * z) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  }
  return quantum::trapezoid(v, h);
}

// Integral of f(x) h(x) rho(x) over the outcome grid, h linear through the nodes.
double outcome_average(const Setup& s, const FunctionSpec& f, const std::vector<double>& h) {
  const auto& xs = s.nodes;
  std::vector<double> v(s.xg.n);
  for (std::size_t i = 0; i < s.xg.n; ++i) {
    const double x = s.xg.x(i);
    std::size_t j = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
    j = std::clamp<std::size_t>(j, 1, xs.size() - 1);
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    v[i] = f(x) * ((1.0 - w) * h[j - 1] + w * h[j]) * s.rho_bar[i];
  }
  return quantum::trapezoid(v, s.xg.dx) / quantum::trapezoid(s.rho_bar, s.xg.dx);
}

struct Oracle {
  double split_step = 0.0;
  double closed_form = 0.0;
};

Oracle quantum_oracle(const Setup& s, const MeasurementPlan& plan, const TwoTimeConfig& cfg) {
  const std::size_t S = s.nodes.size();
  std::vector<double> h(S), hc(S);
  const auto base = s.sys.state(s.grid, plan.t1);
  std::vector<double> potential(s.grid.n * s.grid.n);
  const double mw2 = s.sys.mass() * cfg.params.omega * cfg.params.omega;
  for (std::size_t i = 0; i < s.grid.n; ++i)
    for (std::size_t j = 0; j < s.grid.n; ++j)
      potential[i * s.grid.n + j] = 0.5 * mw2 * (s.grid.x(i) * s.grid.x(i) + s.grid.x(j) * s.grid.x(j));
  const double tau = plan.t2 - plan.t1;
  parallel_for(S, cfg.threads, [&](std::size_t j) {
    auto st = base;
    const double xb = s.nodes[j];
    double wsum = 0.0;
    for (std::size_t a = 0; a < s.grid.n; ++a) {
      const double z = (s.grid.x(a) - xb) / s.width;
      const double amp = std::exp(-0.25 * z * z);
      for (std::size_t b = 0; b < s.grid.n; ++b) {
        auto& p = s.k == 0 ? st.at(a, b) : st.at(b, a);
        p *= amp;
        wsum += std::norm(p);
      }
    }
    if (!(wsum * s.grid.dx * s.grid.dx >= kMinWindowMass * s.width))
      throw DegenerateMeasurement("window at " + std::to_string(xb) + " holds no probability");
    st.normalize();
    if (tau > 0.0) st = quantum::schrodinger_evolve(st, potential, cfg.oracle_dt, tau).back();
    h[j] = observed_mean(s, st.density(), plan.g);
    const auto col = s.sys.collapsed(s.k, xb, s.width, plan.t1);
    hc[j] = gaussian_expectation(plan.g, col.mean(plan.t2)(s.o), col.covariance(plan.t2)(s.o, s.o));
  });
  return {outcome_average(s, plan.f, h), outcome_average(s, plan.f, hc)};
}

enum class Start { collapsed, joint };

// Coordinates (x_0, x_1, xbar); xbar is carried as a frozen third coordinate
// so that collapsed drifts can depend on it.
class OutcomeSampler final : public sde::InitialSampler {
 public:
  OutcomeSampler(const Setup& s, const MeasurementPlan& plan, std::size_t strata, Start mode)
      : outcome_(s.outcome), strata_(strata), k_(s.k), mode_(mode) {
    const auto& sys = s.sys;
    if (mode == Start::collapsed) {
      const auto c0 = sys.collapsed(s.k, 0.0, s.width, plan.t1);
      cov_ = c0.covariance(plan.t1);
      mean0_ = c0.mean(plan.t1);
      // The mean is affine in xbar: cov (2 Re c + e_k xbar / w^2).
      slope_ = cov_.col(s.k) / (s.width * s.width);
    } else {
      cov_ = sys.covariance(plan.t1);
      mean0_ = sys.mean(plan.t1);
      slope_.setZero();
    }
    chol_ = cov_.llt().matrixL();
  }
  std::size_t particles() const override { return 3; }
  void sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
              std::span<double>) const override {
    sde::NoiseStream zs(seed, id, sde::channel::initial_state(0));
    const Eigen::Vector2d z(zs.normal(), zs.normal());
    if (mode_ == Start::collapsed) {
      sde::NoiseStream us(seed, id, sde::channel::initial_state(2));
      const double u = (static_cast<double>(id % strata_) + us.uniform()) / static_cast<double>(strata_);
      const double xb = outcome_->quantile(u);
      const Eigen::Vector2d p = mean0_ + slope_ * xb + chol_ * z;
      x[0] = p(0);
      x[1] = p(1);
      x[2] = xb;
    } else {
      const Eigen::Vector2d p = mean0_ + chol_ * z;
      x[0] = p(0);
      x[1] = p(1);
      x[2] = p(k_);
    }
  }

 private:
  std::shared_ptr<process::GridDensitySampler> outcome_;
  std::size_t strata_;
  std::size_t k_;
  Start mode_;
  Eigen::Matrix2d cov_;
  Eigen::Matrix2d chol_;
  Eigen::Vector2d mean0_;
  Eigen::Vector2d slope_;
};

enum class DriftKind { collapsed, uncollapsed, linear };

std::shared_ptr<sde::PositionField> drift_field(const Setup& s, const MeasurementPlan& plan,
                                                DriftKind kind, double gamma) {
  const double r = s.sys.hbar() / s.sys.mass();
  auto pack = [](const Eigen::Matrix2d& D, const Eigen::Vector2d& col) {
    return std::vector<double>{D(0, 0), D(0, 1), col(0), D(1, 0), D(1, 1), col(1), 0.0, 0.0, 0.0};
  };
  if (kind == DriftKind::linear)
    return sde::LinearField::constant(pack(-gamma * Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero()));
  if (kind == DriftKind::uncollapsed) {
    auto sys = s.sys;
    return std::make_shared<sde::LinearField>(
        3, [sys, pack](double t) { return pack(sys.drift_matrix(t), Eigen::Vector2d::Zero()); },
        [sys](double t) {
          const Eigen::Vector2d o = sys.drift_offset(t);
          return std::vector<double>{o(0), o(1), 0.0};
        });
  }
  auto c0 = s.sys.collapsed(s.k, 0.0, s.width, plan.t1);
  Eigen::Vector2cd e = Eigen::Vector2cd::Zero();
  e(static_cast<Eigen::Index>(s.k)) = 0.5 / (s.width * s.width);
  return std::make_shared<sde::LinearField>(
      3,
      [c0, e, r, pack](double t) {
        const Eigen::Vector2cd v = c0.propagate_linear(e, t);
        return pack(c0.drift_matrix(t), r * (v.real() + v.imag()));
      },
      [c0](double t) {
        const Eigen::Vector2d o = c0.drift_offset(t);
        return std::vector<double>{o(0), o(1), 0.0};
      });
}

struct StochasticOut {
  Estimate est;
  std::size_t escaped = 0;
};

StochasticOut stochastic_value(const Setup& s, const MeasurementPlan& plan, const TwoTimeConfig& cfg,
                               std::uint64_t seed, Start start, DriftKind drift) {
  const double gamma = cfg.control_rate > 0.0 ? cfg.control_rate : cfg.params.omega;
  auto init = std::make_shared<OutcomeSampler>(s, plan, cfg.strata, start);
  const double tau = plan.t2 - plan.t1;
  const std::size_t n = cfg.n_traj;
  std::vector<double> xb(n), xo(n);
  std::size_t escaped = 0;
  if (tau > 0.0) {
    sde::ProcessModel m;
    const double eps = process::nelson_eps(cfg.params.hbar, cfg.params.mass);
    m.eps = {eps, eps, 0.0};
    m.field = drift_field(s, plan, drift, gamma);
    m.init = init;
    sde::IntegratorConfig ic;
    ic.dt = cfg.dt;
    ic.t0 = plan.t1;
    ic.n_steps = static_cast<std::size_t>(std::llround(tau / cfg.dt));
    if (ic.n_steps == 0) ic.n_steps = 1;
    ic.dt = tau / static_cast<double>(ic.n_steps);
    sde::RunOptions opt;
    opt.threads = cfg.threads;
    const auto ens = sde::run_ensemble(m, n, seed, ic, sde::RecordPlan{{ic.n_steps}}, opt);
    process::enforce_escape_budget(ens, 1e-3);
    escaped = ens.invalid_count;
    const auto a = ens.positions(0, 2), b = ens.positions(0, s.o);
    std::copy(a.begin(), a.end(), xb.begin());
    std::copy(b.begin(), b.end(), xo.begin());
  } else {
    std::vector<double> x(3);
    for (std::size_t i = 0; i < n; ++i) {
      init->sample(seed, i, x, {});
      xb[i] = x[2];
      xo[i] = x[s.o];
    }
  }
  const std::size_t S = start == Start::collapsed ? cfg.strata : 1;
  std::vector<double> sum(S, 0.0), sq(S, 0.0);
  std::vector<std::size_t> cnt(S, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(xo[i])) continue;
    const double y = plan.f(xb[i]) * plan.g(xo[i]);
    sum[i % S] += y;
    sq[i % S] += y * y;
    ++cnt[i % S];
  }
  double value = 0.0, var = 0.0;
  for (std::size_t j = 0; j < S; ++j) {
    if (cnt[j] < 2) throw SimulationError("harness", "stratum with fewer than 2 trajectories");
    const double c = static_cast<double>(cnt[j]);
    const double m = sum[j] / c;
    const double v = std::max(0.0, (sq[j] - c * m * m) / (c - 1.0));
    value += m / static_cast<double>(S);
    var += v / c / static_cast<double>(S * S);
  }
  return {{value, std::sqrt(var)}, escaped};
}

double equal_time(const Setup& s, const MeasurementPlan& plan) {
  const auto d = s.sys.state(s.grid, plan.t1).density();
  const std::size_t n = s.grid.n;
  ScalarField2D fg{s.grid, std::vector<double>(n * n)};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double xk = s.grid.x(s.k == 0 ? a : b), xo = s.grid.x(s.k == 0 ? b : a);
      fg.values[a * n + b] = plan.f(xk) * plan.g(xo) * d[a * n + b];
    }
  ScalarField2D dd{s.grid, d};
  return fg.integral() / dd.integral();
}

}  // namespace

TwoTimeResult two_time_expectation(const MeasurementPlan& plan, const TwoTimeConfig& cfg,
                                   std::uint64_t seed) {
  const auto s = make_setup(plan, cfg, 1.0);
  const auto q = quantum_oracle(s, plan, cfg);
  const auto st = stochastic_value(s, plan, cfg, seed, Start::collapsed,
                                   plan.collapse ? DriftKind::collapsed : DriftKind::uncollapsed);
  return {s.width, q.split_step, q.closed_form, st.est, st.escaped};
}

TwoTimeStudy two_time_study(const MeasurementPlan& plan, const TwoTimeConfig& cfg,
                            std::uint64_t seed) {
  const auto s = make_setup(plan, cfg, 1.0);
  TwoTimeStudy out;
  out.plan = plan;
  out.width = s.width;
  const auto q = quantum_oracle(s, plan, cfg);
  out.quantum = q.split_step;
  out.quantum_closed_form = q.closed_form;
  const auto on = stochastic_value(s, plan, cfg, seed, Start::collapsed, DriftKind::collapsed);
  const auto off = stochastic_value(s, plan, cfg, seed, Start::collapsed, DriftKind::uncollapsed);
  out.on = on.est;
  out.off = off.est;
  out.escaped = on.escaped + off.escaped;
  out.equal_time_correlator = equal_time(s, plan);
  if (cfg.width_check) {
    const auto h = make_setup(plan, cfg, 0.5);
    out.quantum_half_width = quantum_oracle(h, plan, cfg).split_step;
    const auto onh = stochastic_value(h, plan, cfg, seed, Start::collapsed, DriftKind::collapsed);
    out.on_half_width = onh.est;
    out.escaped += onh.escaped;
    out.width_stable = std::abs(out.on_half_width.value - out.on.value) <=
                       3.0 * std::hypot(out.on.stderr_, out.on_half_width.stderr_);
  }
  if (cfg.control) {
    const auto con = stochastic_value(s, plan, cfg, seed, Start::collapsed, DriftKind::linear);
    const auto coff = stochastic_value(s, plan, cfg, seed, Start::joint, DriftKind::linear);
    out.control_on = con.est;
    out.control_off = coff.est;
    out.escaped += con.escaped + coff.escaped;
  }
  return out;
}

}  // namespace stochmech::harness
