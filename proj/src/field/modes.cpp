#include "stochmech/field/modes.hpp"

#include <cmath>
#include <numbers>

#include "stochmech/errors.hpp"

namespace stochmech::field {

double ModeSystem::u(std::size_t i, double x) const {
  switch (shape[i]) {
    case ModeShape::constant: return 1.0 / std::sqrt(length);
    case ModeShape::cosine: return std::sqrt(2.0 / length) * std::cos(k[i] * x);
    case ModeShape::sine: return std::sqrt(2.0 / length) * std::sin(k[i] * x);
  }
  return 0.0;
}

std::vector<double> ModeSystem::basis_matrix(std::span<const double> x) const {
  const std::size_t N = size();
  std::vector<double> m(x.size() * N);
  for (std::size_t p = 0; p < x.size(); ++p)
    for (std::size_t i = 0; i < N; ++i) m[p * N + i] = u(i, x[p]);
  return m;
}

ModeSystem mode_basis(double length, std::size_t n_modes, double field_mass) {
  if (n_modes == 0) throw InvalidArgument("mode_basis: need at least one mode");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("mode_basis: length must be positive");
  if (!(field_mass >= 0.0)) throw InvalidArgument("mode_basis: field mass must be non-negative");
  ModeSystem m;
  m.length = length;
  m.field_mass = field_mass;
  for (std::size_t i = 0; i < n_modes; ++i) {
    const std::size_t j = (i + 1) / 2;  // 0, 1, 1, 2, 2, ...
    const double k = 2.0 * std::numbers::pi * static_cast<double>(j) / length;
    m.shape.push_back(i == 0 ? ModeShape::constant : (i % 2 ? ModeShape::cosine : ModeShape::sine));
    m.k.push_back(k);
    m.omega.push_back(std::sqrt(field_mass * field_mass + k * k));
  }
  return m;
}

sde::TrajectoryEnsemble simulate_field_phase_space(const ModeSystem& modes,
                                                   const FieldRunSpec& spec,
                                                   const process::RunConfig& run) {
  const std::size_t N = modes.size();
  std::vector<double> betas = spec.betas;
  if (betas.size() == 1) betas.assign(N, betas[0]);
  if (betas.size() != N) throw InvalidArgument("simulate_field_phase_space: need one beta per mode");
  if (!(spec.hbar > 0.0)) throw InvalidArgument("simulate_field_phase_space: hbar must be positive");
  for (double w : modes.omega)
    if (!(w > 0.0)) throw InvalidArgument("simulate_field_phase_space: zero-frequency mode has no ground state");
  const double eps = spec.eps < 0.0 ? std::sqrt(spec.hbar) : spec.eps;

  std::vector<double> diag(N * N, 0.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    diag[i * N + i] = -modes.omega[i] * modes.omega[i];
    cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = spec.hbar / (2.0 * modes.omega[i]);
  }
  auto positions = std::make_shared<process::GaussianSampler>(
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N)), cov);
  const std::vector<double> omega = modes.omega;
  auto init = process::construct_initial_phase_density(
      positions,
      [omega](std::span<const double> q, std::span<double> v) {
        for (std::size_t i = 0; i < q.size(); ++i) v[i] = -omega[i] * q[i];
      },
      spec.profile);
  return process::simulate_phase_space_multi(sde::LinearField::constant(std::move(diag)), init,
                                             std::vector<double>(N, eps), betas, run);
}

FieldSnapshot reconstruct_field(std::span<const double> q, std::span<const double> v,
                                const ModeSystem& modes, std::span<const double> x) {
  const std::size_t N = modes.size();
  if (q.size() != N || (!v.empty() && v.size() != N))
    throw InvalidArgument("reconstruct_field: coefficient count must equal the mode count");
  FieldSnapshot s;
  s.x.assign(x.begin(), x.end());
  s.phi.assign(x.size(), 0.0);
  if (!v.empty()) s.V.assign(x.size(), 0.0);
  for (std::size_t p = 0; p < x.size(); ++p)
    for (std::size_t i = 0; i < N; ++i) {
      const double u = modes.u(i, x[p]);
      s.phi[p] += q[i] * u;
      if (!v.empty()) s.V[p] += v[i] * u;
    }
  return s;
}

FieldSnapshot reconstruct_field(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                std::size_t rec, std::size_t traj, std::span<const double> x) {
  const std::size_t N = modes.size();
  if (ens.n_particles != N) throw InvalidArgument("reconstruct_field: ensemble/mode count mismatch");
  if (rec >= ens.records() || traj >= ens.n_traj) throw InvalidArgument("reconstruct_field: index out of range");
  std::vector<double> q(N), v;
  for (std::size_t i = 0; i < N; ++i) q[i] = ens.positions(rec, i)[traj];
  if (ens.has_velocity()) {
    v.resize(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = ens.velocities(rec, i)[traj];
  }
  return reconstruct_field(q, v, modes, x);
}

std::vector<double> project_field(std::span<const double> phi, const ModeSystem& modes) {
  const std::size_t n = phi.size();
  if (n == 0) throw InvalidArgument("project_field: empty field");
  const double h = modes.length / static_cast<double>(n);
  std::vector<double> q(modes.size(), 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const double x = h * static_cast<double>(p);
    for (std::size_t i = 0; i < modes.size(); ++i) q[i] += phi[p] * modes.u(i, x) * h;
  }
  return q;
}

namespace {

// xi(x) / sqrt(beta/2) per trajectory, NaN for invalid trajectories.
std::vector<double> noise_field(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                std::size_t rec, double x, double scale) {
  if (!ens.has_noise()) throw InvalidArgument("noise_covariance_check: ensemble has no colored noise");
  if (ens.n_particles != modes.size()) throw InvalidArgument("noise_covariance_check: mode count mismatch");
  std::vector<double> xi(ens.n_traj, 0.0);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double u = modes.u(i, x) * scale;
    const auto a = ens.noise(rec, i);
    for (std::size_t t = 0; t < ens.n_traj; ++t) xi[t] += u * a[t];
  }
  return xi;
}

struct Moments {
  double n = 0, sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0, sq = 0;
};

}  // namespace

NoiseCovariance noise_covariance_check(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                       std::size_t rec, double eps, double beta,
                                       std::span<const double> x, std::span<const double> x_prime) {
  if (x.size() != x_prime.size()) throw InvalidArgument("noise_covariance_check: probe lists differ in length");
  if (!(beta > 0.0)) throw InvalidArgument("noise_covariance_check: beta must be positive");
  const double scale = eps / std::sqrt(0.5 * beta);
  NoiseCovariance out;
  out.x.assign(x.begin(), x.end());
  out.x_prime.assign(x_prime.begin(), x_prime.end());
  for (std::size_t p = 0; p < x.size(); ++p) {
    const auto a = noise_field(ens, modes, rec, x[p], scale);
    const auto b = noise_field(ens, modes, rec, x_prime[p], scale);
    Moments m;
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (!std::isfinite(a[t]) || !std::isfinite(b[t])) continue;
      m.n += 1;
      m.sa += a[t];
      m.sb += b[t];
      m.saa += a[t] * a[t];
    }
    const double ma = m.sa / m.n, mb = m.sb / m.n;
    double c = 0.0, c2 = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (!std::isfinite(a[t]) || !std::isfinite(b[t])) continue;
      const double prod = (a[t] - ma) * (b[t] - mb);
      c += prod;
      c2 += prod * prod;
    }
    const double cov = c / (m.n - 1);
    out.covariance.push_back(cov);
    out.stderr_.push_back(std::sqrt(std::max(0.0, c2 / m.n - (c / m.n) * (c / m.n)) / m.n));
    double k = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) k += modes.u(i, x[p]) * modes.u(i, x_prime[p]);
    out.kernel.push_back(eps * eps * k);
    out.mean.push_back(ma);
    out.mean_stderr.push_back(std::sqrt((m.saa / m.n - ma * ma) / m.n));
  }
  return out;
}

RatioEstimate noise_covariance_ratio(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                     std::size_t rec, double x, double x_prime) {
  constexpr std::size_t G = 20;
  const auto a = noise_field(ens, modes, rec, x, 1.0);
  const auto b = noise_field(ens, modes, rec, x_prime, 1.0);
  // Per-group raw moments; covariances from totals minus one group.
  std::vector<Moments> g(G);
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!std::isfinite(a[t]) || !std::isfinite(b[t])) continue;
    Moments& m = g[t % G];
    m.n += 1;
    m.sa += a[t];
    m.sb += b[t];
    m.sab += a[t] * b[t];
    m.saa += a[t] * a[t];
  }
  Moments tot;
  for (const auto& m : g) {
    tot.n += m.n;
    tot.sa += m.sa;
    tot.sb += m.sb;
    tot.sab += m.sab;
    tot.saa += m.saa;
  }
  auto ratio = [](const Moments& m) {
    const double ma = m.sa / m.n, mb = m.sb / m.n;
    return (m.sab / m.n - ma * mb) / (m.saa / m.n - ma * ma);
  };
  RatioEstimate r;
  r.ratio = ratio(tot);
  std::vector<double> rep(G);
  double mean = 0.0;
  for (std::size_t k = 0; k < G; ++k) {
    Moments m = tot;
    m.n -= g[k].n;
    m.sa -= g[k].sa;
    m.sb -= g[k].sb;
    m.sab -= g[k].sab;
    m.saa -= g[k].saa;
    rep[k] = ratio(m);
    mean += rep[k] / G;
  }
  double ss = 0.0;
  for (double v : rep) ss += (v - mean) * (v - mean);
  r.stderr_ = std::sqrt(ss * (G - 1.0) / G);
  double kxy = 0.0, kxx = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    kxy += modes.u(i, x) * modes.u(i, x_prime);
    kxx += modes.u(i, x) * modes.u(i, x);
  }
  r.kernel_ratio = kxy / kxx;
  return r;
}

FieldResidual field_nn_residual(const sde::TrajectoryEnsemble& ens, const ModeSystem& modes,
                                double t, const estimators::DerivativeSettings& settings,
                                std::span<const double> probes,
                                std::span<const double> mode_deltas) {
  const std::size_t N = modes.size();
  if (!mode_deltas.empty() && mode_deltas.size() != N)
    throw InvalidArgument("field_nn_residual: need one lag per mode");
  if (ens.n_particles != N) throw InvalidArgument("field_nn_residual: mode count mismatch");
  if (probes.empty()) throw InvalidArgument("field_nn_residual: no probe points");
  FieldResidual out;
  for (std::size_t i = 0; i < N; ++i) {
    auto s = settings;
    s.particle = i;
    if (!mode_deltas.empty()) s.delta = mode_deltas[i];
    const auto acc = estimators::stochastic_acceleration(ens, t, s);
    const double w2 = modes.omega[i] * modes.omega[i];
    const auto r = estimators::newton_nelson_residual(acc.symmetric, [w2](double q) { return -w2 * q; });
    out.mode_norm.push_back(r.norm);
    out.mode_pooled_stderr.push_back(r.pooled_stderr);
  }
  double n2 = 0.0, s2 = 0.0;
  for (double x : probes) {
    double r2 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double u2 = modes.u(i, x) * modes.u(i, x);
      r2 += out.mode_norm[i] * out.mode_norm[i] * u2;
      e2 += out.mode_pooled_stderr[i] * out.mode_pooled_stderr[i] * u2;
    }
    out.probe_residual.push_back(std::sqrt(r2));
    n2 += r2;
    s2 += e2;
  }
  out.norm = std::sqrt(n2 / static_cast<double>(probes.size()));
  out.pooled_stderr = std::sqrt(s2 / static_cast<double>(probes.size()));
  return out;
}

}  // namespace stochmech::field
