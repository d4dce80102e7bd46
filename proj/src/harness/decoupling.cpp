#include "stochmech/harness/decoupling.hpp"

#include <cmath>

#include "stochmech/errors.hpp"
#include "stochmech/process/simulators.hpp"

namespace stochmech::harness {

Eigen::Matrix2d ground_state_covariance(const Eigen::Matrix2d& k, double hbar, double mass) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(-k);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw InvalidArgument("decoupling: -K must be positive definite for a ground state");
  const Eigen::Vector2d inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return (hbar / (2.0 * mass)) * es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

Eigen::Matrix2d initial_cov(const DecouplingSpec& s) {
  if (s.initial_covariance.size() == 0) return ground_state_covariance(s.k_before, s.hbar, s.mass);
  if (s.initial_covariance.rows() != 2 || s.initial_covariance.cols() != 2)
    throw InvalidArgument("decoupling: initial covariance must be 2x2");
  return s.initial_covariance;
}

// Velocities start at the osmotic velocity -(eps^2/2) Sigma^-1 x of the Gaussian.
Eigen::Matrix2d velocity_gain(const DecouplingSpec& s, const Eigen::Matrix2d& sigma) {
  const double eps2 = s.hbar / s.mass;
  return -0.5 * eps2 * sigma.inverse();
}

void validate(const DecouplingSpec& s) {
  if (!(s.horizon > 0.0) || !(s.dt > 0.0)) throw InvalidArgument("decoupling: horizon and dt must be positive");
  if (s.record_stride == 0) throw InvalidArgument("decoupling: record stride must be >= 1");
  if (s.n_traj < 2) throw InvalidArgument("decoupling: need at least 2 trajectories");
  if (!(s.profile.spread >= 0.0)) throw InvalidArgument("decoupling: velocity spread must be >= 0");
}

}  // namespace

Eigen::MatrixXd linear_phase_space_covariance(const DecouplingSpec& s, double t) {
  const Eigen::Matrix2d sigma = initial_cov(s);
  const Eigen::Matrix2d B = velocity_gain(s, sigma);
  const double eps = process::nelson_eps(s.hbar, s.mass);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(6, 6);
  S.block<2, 2>(0, 0) = sigma;
  S.block<2, 2>(0, 2) = sigma * B.transpose();
  S.block<2, 2>(2, 0) = B * sigma;
  S.block<2, 2>(2, 2) = B * sigma * B.transpose() + s.profile.spread * s.profile.spread * Eigen::Matrix2d::Identity();
  S.block<2, 2>(4, 4) = 0.5 * s.beta * Eigen::Matrix2d::Identity();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(6, 6);
  F.block<2, 2>(0, 2) = Eigen::Matrix2d::Identity();
  F.block<2, 2>(0, 4) = eps * Eigen::Matrix2d::Identity();
  F.block<2, 2>(2, 0) = s.k_after;
  F.block<2, 2>(4, 4) = -s.beta * Eigen::Matrix2d::Identity();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(6, 6);
  Q.block<2, 2>(4, 4) = s.beta * s.beta * Eigen::Matrix2d::Identity();
  auto rhs = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return F * X + X * F.transpose() + Q; };
  // RK4 with a step well inside the 1/beta scale.
  const auto n = static_cast<std::size_t>(std::ceil(t * std::max(50.0 * s.beta, 1000.0)));
  const double h = n ? t / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd k1 = rhs(S), k2 = rhs(S + 0.5 * h * k1), k3 = rhs(S + 0.5 * h * k2),
                          k4 = rhs(S + h * k3);
    S += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return S;
}

DecouplingReport decoupling_experiment(const DecouplingSpec& s, std::uint64_t seed) {
  validate(s);
  const Eigen::Matrix2d sigma = initial_cov(s);
  const Eigen::Matrix2d B = velocity_gain(s, sigma);
  auto pos = std::make_shared<process::GaussianSampler>(Eigen::Vector2d::Zero(), sigma);
  auto init = process::construct_initial_phase_density(
      pos,
      [B](std::span<const double> x, std::span<double> v) {
        v[0] = B(0, 0) * x[0] + B(0, 1) * x[1];
        v[1] = B(1, 0) * x[0] + B(1, 1) * x[1];
      },
      s.profile);
  auto flat = [](const Eigen::Matrix2d& k) { return std::vector<double>{k(0, 0), k(0, 1), k(1, 0), k(1, 1)}; };
  const double eps = process::nelson_eps(s.hbar, s.mass);

  sde::ProcessModel m;
  m.dynamics = sde::Dynamics::phase_space;
  m.driving = sde::Driving::colored;
  m.eps = {eps, eps};
  m.beta = {s.beta, s.beta};
  m.field = process::switched_linear_field(flat(s.k_before), flat(s.k_after), 0.0);
  m.init = init;
  if (s.swap_noise) m.noise_channels = {sde::channel::dynamics(1), sde::channel::dynamics(0)};
  sde::IntegratorConfig ic;
  ic.dt = s.dt;
  ic.n_steps = static_cast<std::size_t>(std::llround(s.horizon / s.dt));
  sde::RunOptions opt;
  opt.threads = s.threads;
  const auto ens = sde::run_ensemble(m, s.n_traj, seed, ic, sde::RecordPlan::every(ic.n_steps, s.record_stride), opt);
  process::enforce_escape_budget(ens, 1e-3);

  DecouplingReport r;
  r.escaped = ens.invalid_count;
  r.times = ens.times;
  for (std::size_t rec = 0; rec < ens.records(); ++rec) {
    const auto a = ens.positions(rec, 0), b = ens.positions(rec, 1);
    double sa = 0, sb = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::isfinite(a[i]) && std::isfinite(b[i])) {
        sa += a[i];
        sb += b[i];
        ++n;
      }
    const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
    double vaa = 0, vbb = 0, cab = 0, c2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
      const double da = a[i] - ma, db = b[i] - mb;
      vaa += da * da;
      vbb += db * db;
      cab += da * db;
      c2 += da * da * db * db;
    }
    const double nn = static_cast<double>(n);
    const double cov = cab / (nn - 1.0);
    r.mean1.push_back(ma);
    r.mean2.push_back(mb);
    r.var1.push_back(vaa / (nn - 1.0));
    r.var2.push_back(vbb / (nn - 1.0));
    r.cov12.push_back(cov);
    r.cov12_stderr.push_back(std::sqrt(std::max(0.0, c2 / nn - (cab / nn) * (cab / nn)) / nn));
    const auto S = linear_phase_space_covariance(s, ens.times[rec]);
    r.var1_oracle.push_back(S(0, 0));
    r.var2_oracle.push_back(S(1, 1));
    r.cov12_oracle.push_back(S(0, 1));
  }
  return r;
}

}  // namespace stochmech::harness
