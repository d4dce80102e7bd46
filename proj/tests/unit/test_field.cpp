#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <numbers>

#include "stats_util.hpp"
#include "stochmech/errors.hpp"
#include "stochmech/field/modes.hpp"
#include "stochmech/field/spectrum.hpp"

using namespace stochmech;
using namespace stochmech::field;

namespace {

constexpr double kPi = std::numbers::pi;

process::RunConfig run_cfg(double dt, std::size_t steps, std::size_t n, std::uint64_t seed,
                           std::vector<std::size_t> rec) {
  process::RunConfig rc;
  rc.integrator = sde::IntegratorConfig{dt, steps};
  rc.n_traj = n;
  rc.seed = seed;
  rc.plan.steps = std::move(rec);
  return rc;
}

// Exact covariance of (q, v, A) for one mode, by RK4 on dS = MS + SM' + Q.
Eigen::Matrix3d mode_covariance(double omega, double eps, double beta, double hbar, double T) {
  Eigen::Matrix3d M;
  M << 0, 1, eps, -omega * omega, 0, 0, 0, 0, -beta;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
  Q(2, 2) = beta * beta;
  Eigen::Matrix3d S;
  S << hbar / (2 * omega), -hbar / 2, 0, -hbar / 2, omega * hbar / 2, 0, 0, 0, beta / 2;
  auto f = [&](const Eigen::Matrix3d& X) -> Eigen::Matrix3d { return M * X + X * M.transpose() + Q; };
  const double h = 1e-5;
  for (long k = 0; k < std::lround(T / h); ++k) {
    const Eigen::Matrix3d k1 = f(S), k2 = f(S + 0.5 * h * k1), k3 = f(S + 0.5 * h * k2), k4 = f(S + h * k3);
    S += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return S;
}

}  // namespace

TEST(Modes, DispersionExamples) {
  const auto m0 = mode_basis(2 * kPi, 7, 0.0);
  EXPECT_EQ(m0.shape[5], ModeShape::cosine);
  EXPECT_DOUBLE_EQ(m0.k[5], 3.0);
  EXPECT_DOUBLE_EQ(m0.omega[5], 3.0);
  const auto m4 = mode_basis(2 * kPi, 7, 4.0);
  EXPECT_DOUBLE_EQ(m4.omega[5], 5.0);
  EXPECT_DOUBLE_EQ(m4.omega[6], 5.0);
  for (std::size_t i = 1; i < m4.size(); ++i) {
    EXPECT_GE(m4.omega[i], m4.omega[i - 1]);
    EXPECT_GE(m4.omega[i], 4.0);
  }
  EXPECT_THROW(mode_basis(1.0, 0, 0.0), InvalidArgument);
  EXPECT_THROW(mode_basis(-1.0, 3, 0.0), InvalidArgument);
}

TEST(Modes, GramMatrixIsIdentity) {
  const double L = 3.7;
  const auto m = mode_basis(L, 33, 1.0);
  // Fine midpoint rule, independent of project_field.
  const std::size_t n = 8192;
  const double h = L / n;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double g = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const double x = (p + 0.5) * h;
        g += m.u(i, x) * m.u(j, x) * h;
      }
      EXPECT_NEAR(g, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
    }
}

TEST(Modes, ReconstructionAndProjection) {
  const double L = 2.0;
  const auto m = mode_basis(L, 9, 0.5);
  std::vector<double> x(256);
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = L * p / x.size();
  std::vector<double> q(9, 0.0);
  q[4] = 1.0;
  const auto s = reconstruct_field(q, {}, m, x);
  for (std::size_t p = 0; p < x.size(); ++p)
    EXPECT_NEAR(s.phi[p], std::sqrt(2.0 / L) * std::sin(2 * kPi * 2 * x[p] / L), 1e-14);
  const std::vector<double> q2{0.3, -1.2, 0.7, 0.05, 2.0, -0.4, 0.9, -0.6, 1.1};
  const std::vector<double> v2{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto s2 = reconstruct_field(q2, v2, m, x);
  const auto back = project_field(s2.phi, m);
  const auto backv = project_field(s2.V, m);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(back[i], q2[i], 1e-8);
    EXPECT_NEAR(backv[i], v2[i], 1e-8);
  }
}

TEST(FieldSim, SingleModeEqualsParticleRun) {
  const auto m = mode_basis(1.0, 1, 1.3);
  FieldRunSpec spec;
  spec.betas = {50.0};
  spec.hbar = 0.8;
  const auto rc = run_cfg(0.001, 300, 2000, 17, {0, 150, 300});
  const auto field = simulate_field_phase_space(m, spec, rc);

  const double w = m.omega[0];
  auto pos = process::GaussianSampler::scalar(0.0, spec.hbar / (2 * w));
  auto init = process::construct_initial_phase_density(
      pos, [w](std::span<const double> q, std::span<double> v) { v[0] = -w * q[0]; }, {});
  const auto part = process::simulate_phase_space(sde::LinearField::constant({-w * w}), init,
                                                  std::sqrt(spec.hbar), 50.0, rc);
  ASSERT_EQ(field.x.size(), part.x.size());
  EXPECT_EQ(std::memcmp(field.x.data(), part.x.data(), part.x.size() * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(field.v.data(), part.v.data(), part.v.size() * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(field.a.data(), part.a.data(), part.a.size() * sizeof(double)), 0);
}

TEST(FieldSim, ClassicalModesOscillate) {
  const auto m = mode_basis(2 * kPi, 5, 1.0);
  FieldRunSpec spec;
  spec.betas = {10.0};
  spec.eps = 0.0;
  const double dt = 1e-4, T = 1.0;
  const auto ens = simulate_field_phase_space(m, spec, run_cfg(dt, 10000, 200, 3, {0, 10000}));
  double e0 = 0.0, e1 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double w = m.omega[i];
    const auto q0 = ens.positions(0, i), v0 = ens.velocities(0, i);
    const auto q1 = ens.positions(1, i), v1 = ens.velocities(1, i);
    for (std::size_t t = 0; t < ens.n_traj; ++t) {
      const double amp = std::hypot(q0[t], v0[t] / w);
      const double expect = q0[t] * std::cos(w * T) + v0[t] / w * std::sin(w * T);
      // Explicit Euler: amplitude drift and phase error both O(w^2 dt T).
      EXPECT_NEAR(q1[t], expect, 2 * w * w * dt * T * amp + 1e-12);
      e0 += 0.5 * (v0[t] * v0[t] + w * w * q0[t] * q0[t]);
      e1 += 0.5 * (v1[t] * v1[t] + w * w * q1[t] * q1[t]);
    }
  }
  EXPECT_NEAR(e1 / e0, 1.0, 5 * dt * T);
}

TEST(FieldSim, ModeVariancesFollowLinearOracle) {
  const auto m = mode_basis(2 * kPi, 4, 1.0);
  FieldRunSpec spec;
  spec.betas = {100.0};
  const double dt = 0.001, T = 0.5;
  const auto ens = simulate_field_phase_space(m, spec, run_cfg(dt, 500, 40000, 5, {500}));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto S = mode_covariance(m.omega[i], 1.0, 100.0, 1.0, T);
    const double var = testutil::variance(ens.positions(0, i));
    // Sample variance relative error ~ sqrt(2/n) = 0.7%.
    EXPECT_NEAR(var / S(0, 0), 1.0, 0.03) << "mode " << i;
  }
  // Different modes stay uncorrelated.
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const auto a = ens.positions(0, i), b = ens.positions(0, j);
      std::vector<double> prod(a.size());
      for (std::size_t t = 0; t < a.size(); ++t) prod[t] = a[t] * b[t];
      const double se = std::sqrt(testutil::variance(prod) / prod.size());
      EXPECT_LT(std::abs(testutil::mean(prod)), 3.5 * se) << i << "," << j;
    }
}

TEST(FieldSim, NoiseCovarianceTracksKernel) {
  const double L = 1.0, beta = 100.0;
  double prev = 1.0;
  for (std::size_t N : {8, 16, 32}) {
    const auto m = mode_basis(L, N, 1.0);
    FieldRunSpec spec;
    spec.betas = {beta};
    const auto ens = simulate_field_phase_space(m, spec, run_cfg(0.001, 100, 20000, 9, {100}));
    const std::vector<double> xs{0.0, 0.0, 0.3}, xp{0.0, 0.5, 0.3};
    const auto c = noise_covariance_check(ens, m, 0, 1.0, beta, xs, xp);
    // Diagonal at x = 0 is (N + 1)/L for even N.
    EXPECT_NEAR(c.kernel[0], (N + 1) / L, 1e-9);
    for (std::size_t p = 0; p < xs.size(); ++p) {
      EXPECT_NEAR(c.covariance[p], c.kernel[p], 4 * c.stderr_[p]) << N << " probe " << p;
      EXPECT_LT(std::abs(c.mean[p]), 3.5 * c.mean_stderr[p]);
    }
    const auto r = noise_covariance_ratio(ens, m, 0, 0.0, 0.5 * L);
    EXPECT_NEAR(r.kernel_ratio, 1.0 / (N + 1), 1e-12);
    EXPECT_NEAR(r.ratio, r.kernel_ratio, 4 * r.stderr_);
    EXPECT_LT(r.kernel_ratio, prev);
    prev = r.kernel_ratio;
  }
}

TEST(FieldSim, ResidualSingleModeMatchesParticle) {
  const auto m = mode_basis(1.0, 1, 1.0);
  FieldRunSpec spec;
  spec.betas = {100.0};
  const auto ens = simulate_field_phase_space(m, spec, run_cfg(0.001, 120, 20000, 12, {80, 100, 120}));
  estimators::DerivativeSettings s;
  s.delta = 0.02;
  const std::vector<double> probes{0.1, 0.4, 0.8};
  const auto fr = field_nn_residual(ens, m, 0.1, s, probes);
  const auto acc = estimators::stochastic_acceleration(ens, 0.1, s);
  const auto r = estimators::newton_nelson_residual(acc.symmetric, [](double q) { return -q; });
  EXPECT_DOUBLE_EQ(fr.norm, r.norm);
  EXPECT_DOUBLE_EQ(fr.pooled_stderr, r.pooled_stderr);
}

TEST(FieldSim, ClassicalResidualVanishes) {
  const auto m = mode_basis(2 * kPi, 3, 1.0);
  FieldRunSpec spec;
  spec.betas = {10.0};
  spec.eps = 0.0;
  const auto ens = simulate_field_phase_space(m, spec, run_cfg(0.001, 60, 20000, 4, {40, 50, 60}));
  estimators::DerivativeSettings s;
  s.delta = 0.01;
  const std::vector<double> probes{0.0, 1.0, 2.0, 3.0};
  const auto fr = field_nn_residual(ens, m, 0.05, s, probes);
  for (std::size_t i = 0; i < m.size(); ++i) {
    // O(delta) against the force scale omega^2 sd(q).
    const double scale = m.omega[i] * m.omega[i] * std::sqrt(0.5 / m.omega[i]);
    EXPECT_LT(fr.mode_norm[i], 0.05 * scale) << i;
  }
}

TEST(Spectrum, ClosedForms) {
  const double G = 1.0 / (4 * kPi);
  EXPECT_DOUBLE_EQ(gravitational_spectrum(2.0, 1.0, 1.0, 1.0, G), 16.0);
  EXPECT_EQ(gravitational_spectrum(3.0, 0.0, 1.0, 1.0, G), 0.0);
  EXPECT_DOUBLE_EQ(potential_spectrum(std::pow(1.7, 4), 1.7, G), 1.0);
  for (double k : {0.3, 1.0, 4.5}) {
    const double p = gravitational_spectrum(k, 2.5, 0.7, 1.3, 0.2);
    EXPECT_NEAR(potential_spectrum(p, k, 0.2), 0.7 * 0.7 * 2.5 / (1.3 * 1.3), 1e-13);
    // Power law A k^n -> (4 pi G)^2 A k^(n - 4).
    const double fg = 4 * kPi * 0.2;
    EXPECT_NEAR(potential_spectrum(2.0 * std::pow(k, 1.5), k, 0.2), fg * fg * 2.0 * std::pow(k, -2.5), 1e-12);
  }
  EXPECT_THROW(gravitational_spectrum(1.0, 1.0, 1.0, 0.0, G), InvalidArgument);
  EXPECT_THROW(gravitational_spectrum(1.0, 1.0, 1.0, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(potential_spectrum(1.0, 0.0, G), InvalidArgument);
}

TEST(Spectrum, PoissonRoundTrip) {
  const double G = 1.0 / (4 * kPi);
  const auto flat = spectral_poisson_check(
      [&](double k) { return gravitational_spectrum(k, 1.0, 1.0, 1.0, G); }, G, 1024, 2 * kPi, 256, 8, 77);
  for (std::size_t b = 0; b < flat.expected.size(); ++b) {
    EXPECT_NEAR(flat.expected[b], 1.0, 1e-12);
    EXPECT_NEAR(flat.ratio[b], 1.0, 4 * flat.rel_stderr[b]);
  }
  EXPECT_LT(flat.max_rel_error, 0.05);
  const auto pl = spectral_poisson_check([](double k) { return std::pow(k, -1.0); }, 0.3, 1024, 50.0, 256, 8, 78);
  EXPECT_LT(pl.max_rel_error, 0.05);
}
