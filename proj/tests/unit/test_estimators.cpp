#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "stats_util.hpp"
#include "stochmech/errors.hpp"
#include "stochmech/estimators/binning.hpp"
#include "stochmech/estimators/density.hpp"
#include "stochmech/estimators/derivatives.hpp"
#include "stochmech/process/samplers.hpp"
#include "stochmech/process/simulators.hpp"

using namespace stochmech;
using namespace stochmech::estimators;

namespace {

std::vector<double> std_normals(std::size_t n, std::uint32_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

process::RunConfig run_at(double dt, std::vector<double> times, std::size_t n_traj,
                          std::uint64_t seed) {
  process::RunConfig rc;
  const double T = *std::max_element(times.begin(), times.end());
  rc.integrator = sde::IntegratorConfig{dt, static_cast<std::size_t>(std::llround(T / dt))};
  rc.n_traj = n_traj;
  rc.seed = seed;
  rc.plan = sde::RecordPlan::at_times(rc.integrator, times);
  return rc;
}

sde::TrajectoryEnsemble ho_ground_nelson(double dt, std::vector<double> times, std::size_t n,
                                         std::uint64_t seed) {
  process::ProcessSpec spec;
  return process::run_catalog_process(spec, run_at(dt, std::move(times), n, seed));
}

// Exact finite-lag forward coefficient of the unit-rate stationary OU.
double lag_factor(double delta) { return (1.0 - std::exp(-delta)) / delta; }

// Sum of squared standardized deviations over reliable bins and their number.
std::pair<double, std::size_t> chi2_against(const DerivativeField& f,
                                            const std::function<double(double)>& ref) {
  double c = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < f.bins.count; ++j) {
    if (!f.reliable[j]) continue;
    const double z = (f.estimate[j] - ref(f.x_mean[j])) / f.stderr_[j];
    c += z * z;
    ++k;
  }
  return {c, k};
}

double max_abs_z(const DerivativeField& f, const std::function<double(double)>& ref) {
  double m = 0.0;
  for (std::size_t j = 0; j < f.bins.count; ++j)
    if (f.reliable[j])
      m = std::max(m, std::abs(f.estimate[j] - ref(f.x_mean[j])) / f.stderr_[j]);
  return m;
}

}  // namespace

TEST(Binning, LocateAndEdges) {
  const auto b = Bins::uniform(-1.0, 1.0, 4);
  EXPECT_EQ(b.locate(-1.0), 0u);
  EXPECT_EQ(b.locate(-0.51), 0u);
  EXPECT_EQ(b.locate(0.99), 3u);
  EXPECT_EQ(b.locate(1.0), Bins::npos);
  EXPECT_EQ(b.locate(-1.01), Bins::npos);
  EXPECT_EQ(b.locate(std::nan("")), Bins::npos);
  EXPECT_DOUBLE_EQ(b.center(1), -0.25);
  EXPECT_EQ(b.edges().size(), 5u);
  EXPECT_THROW(Bins::uniform(1.0, 1.0, 3), InvalidArgument);
}

TEST(Binning, QuantilesAndFreedmanDiaconis) {
  const std::vector<double> v{4, 1, 3, 2, std::nan("")};
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  const auto z = std_normals(100000, 3);
  const auto b = freedman_diaconis(z);
  // Width 2 IQR n^(-1/3) with IQR = 1.349 for the standard normal.
  const double h = 2.0 * 1.349 / std::cbrt(100000.0);
  EXPECT_NEAR(b.width, h, 0.05 * h);
  EXPECT_NEAR(b.lo, -3.29, 0.1);
  EXPECT_NEAR(b.hi(), 3.29, 0.1);
  const std::vector<double> same(100, 2.0);
  EXPECT_EQ(freedman_diaconis(same).count, 1u);
}

TEST(Density, StandardNormalL1) {
  const auto z = std_normals(100000, 11);
  const auto grid = quantum::Grid1D::centered(6.0, 601);
  const auto rho = estimate_density(z, grid, silverman_bandwidth(z));
  EXPECT_NEAR(rho.integral(), 1.0, 1e-12);
  double l1 = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i)
    l1 += std::abs(rho.values[i] - std::exp(-0.5 * grid.x(i) * grid.x(i)) / std::sqrt(2 * std::numbers::pi)) * grid.dx;
  EXPECT_LT(l1, 0.02);
}

TEST(Density, IdenticalSamplesGiveKernel) {
  const std::vector<double> s(1000, 0.3);
  const auto grid = quantum::Grid1D::centered(3.0, 1201);
  const double h = 0.2;
  const auto rho = estimate_density(s, grid, h);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    m1 += grid.x(i) * rho.values[i] * grid.dx;
    m2 += (grid.x(i) - 0.3) * (grid.x(i) - 0.3) * rho.values[i] * grid.dx;
  }
  EXPECT_NEAR(rho.integral(), 1.0, 1e-12);
  EXPECT_NEAR(m1, 0.3, 1e-6);
  EXPECT_NEAR(std::sqrt(m2), h, 1e-4);
}

TEST(Density, RecoversOracleThroughSampler) {
  quantum::CatalogParams p;
  p.x0 = 1.0;
  const auto st = quantum::make_analytic("ho_coherent", p);
  quantum::Grid1D g = quantum::Grid1D::centered(8.0, 4001);
  std::vector<double> rho(g.n);
  for (std::size_t i = 0; i < g.n; ++i) rho[i] = st->rho(g.x(i), 0.7);
  process::GridDensitySampler sampler(g.points(), rho);
  std::vector<double> s(100000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = sampler.quantile((static_cast<double>(i) + 0.5) / s.size());
  std::shuffle(s.begin(), s.end(), std::mt19937_64(5));
  const auto grid = quantum::Grid1D::centered(6.0, 601);
  const auto est = estimate_density(s, grid, silverman_bandwidth(s));
  double l1 = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) l1 += std::abs(est.values[i] - st->rho(grid.x(i), 0.7)) * grid.dx;
  EXPECT_LT(l1, 0.02);
}

TEST(Density, RejectsBadInput) {
  const auto z = std_normals(2000, 1);
  const auto grid = quantum::Grid1D::centered(5.0, 101);
  EXPECT_THROW(estimate_density(z, grid, 0.0), InvalidArgument);
  EXPECT_THROW(estimate_density(z, grid, -1.0), InvalidArgument);
  EXPECT_THROW(estimate_density(std::span(z).first(500), grid, 0.1), InvalidArgument);
}

TEST(Conditional, IdentityGivesCenters) {
  const auto x = std_normals(50000, 2);
  const auto bins = freedman_diaconis(x);
  const auto c = conditional_mean(x, x, bins);
  for (std::size_t j = 0; j < bins.count; ++j) {
    if (!c.reliable[j]) continue;
    EXPECT_LE(std::abs(c.mean[j] - bins.center(j)), 0.5 * bins.width);
  }
}

TEST(Conditional, IndependentTargetPassesAnova) {
  const auto x = std_normals(50000, 4);
  const auto f = std_normals(50000, 5);
  const auto bins = Bins::uniform(-2.0, 2.0, 20);
  const auto c = conditional_mean(x, f, bins);
  // Between-bin chi-square of the means around the pooled mean.
  double tot = 0.0, n = 0.0;
  for (std::size_t j = 0; j < bins.count; ++j) {
    tot += c.mean[j] * static_cast<double>(c.count[j]);
    n += static_cast<double>(c.count[j]);
  }
  const double grand = tot / n;
  double chi2 = 0.0;
  for (std::size_t j = 0; j < bins.count; ++j)
    chi2 += (c.mean[j] - grand) * (c.mean[j] - grand) / (c.stderr_[j] * c.stderr_[j]);
  EXPECT_GT(testutil::chi2_sf(chi2, 19.0), 0.01);
}

TEST(Conditional, EmptyRangeAndSmallSamples) {
  const auto x = std_normals(1000, 6);
  const auto c = conditional_mean(x, x, Bins{});
  EXPECT_TRUE(c.empty());
  const std::vector<double> few(10, 0.0);
  EXPECT_THROW(conditional_mean(few, few, Bins::uniform(-1, 1, 2)), InvalidArgument);
  const auto far = conditional_mean(x, x, Bins::uniform(50.0, 60.0, 5));
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(far.count[j], 0u);
    EXPECT_FALSE(far.reliable[j]);
  }
}

// Phase-space HO at beta = 100: E[A | x] is linear in x with the slope
// Cov(x, A)/Var(x) from the exact covariance ODE of the linear system.
TEST(Conditional, PhaseSpaceNoiseGivenPosition) {
  const double beta = 100.0, dt = 0.001, T = 0.5;
  process::ProcessSpec spec;
  spec.kind = process::Kind::phase_space;
  spec.beta = beta;
  auto rc = run_at(dt, {T}, 100000, 31);
  const auto ens = process::run_catalog_process(spec, rc);

  Eigen::Matrix3d M;
  M << 0, 1, 1, -1, 0, 0, 0, 0, -beta;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
  Q(2, 2) = beta * beta;
  Eigen::Matrix3d S;
  S << 0.5, -0.5, 0, -0.5, 0.5, 0, 0, 0, beta / 2;
  auto rhs = [&](const Eigen::Matrix3d& X) -> Eigen::Matrix3d { return M * X + X * M.transpose() + Q; };
  const double h = 1e-5;
  for (int k = 0; k < static_cast<int>(std::llround(T / h)); ++k) {
    const Eigen::Matrix3d k1 = rhs(S), k2 = rhs(S + 0.5 * h * k1), k3 = rhs(S + 0.5 * h * k2),
                          k4 = rhs(S + h * k3);
    S += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  const double slope = S(0, 2) / S(0, 0);

  const auto x = ens.positions(0);
  const auto a = ens.noise(0);
  const auto bins = freedman_diaconis(x);
  const auto c = conditional_mean(x, a, bins);
  std::size_t k = 0;
  double chi2 = 0.0;
  for (std::size_t j = 0; j < bins.count; ++j) {
    if (!c.reliable[j]) continue;
    const double z = (c.mean[j] - slope * c.x_mean[j]) / c.stderr_[j];
    chi2 += z * z;
    ++k;
  }
  EXPECT_GT(testutil::chi2_sf(chi2, static_cast<double>(k)), 0.001) << chi2 << " / " << k;
  // The dependence is small against the spread of A.
  EXPECT_LT(std::abs(slope) * std::sqrt(S(0, 0)) / std::sqrt(beta / 2), 0.2);
}

TEST(Derivatives, ForwardOnHoGround) {
  const double dt = 0.01, delta = 0.05;
  const auto ens = ho_ground_nelson(dt, {0.5, 0.5 + delta}, 200000, 41);
  DerivativeSettings s;
  s.delta = delta;
  const auto f = forward_derivative(ens, 0.5, s);
  ASSERT_GT(f.reliable_count(), 20u);
  const double c = lag_factor(delta);
  const auto [chi2, k] = chi2_against(f, [&](double x) { return -c * x; });
  EXPECT_GT(testutil::chi2_sf(chi2, static_cast<double>(k)), 0.001) << chi2 << " / " << k;
  EXPECT_LT(max_abs_z(f, [&](double x) { return -c * x; }), 4.5);
}

TEST(Derivatives, BackwardOnHoGroundAndOsmoticIdentity) {
  const double dt = 0.01, delta = 0.05;
  const auto ens = ho_ground_nelson(dt, {0.5 - delta, 0.5, 0.5 + delta}, 200000, 43);
  DerivativeSettings s;
  s.delta = delta;
  s.bins = Bins::uniform(-2.0, 2.0, 40);
  const auto fp = forward_derivative(ens, 0.5, s);
  const auto fm = backward_derivative(ens, 0.5, s);
  const double c = lag_factor(delta);
  const auto [chi2, k] = chi2_against(fm, [&](double x) { return c * x; });
  EXPECT_GT(testutil::chi2_sf(chi2, static_cast<double>(k)), 0.001) << chi2 << " / " << k;

  // D+x + D-x is twice the current velocity, zero for a stationary state.
  DerivativeField sum = fp;
  for (std::size_t j = 0; j < sum.bins.count; ++j) {
    sum.estimate[j] = fp.estimate[j] + fm.estimate[j];
    sum.stderr_[j] = std::hypot(fp.stderr_[j], fm.stderr_[j]);
  }
  EXPECT_LT(max_abs_z(sum, [](double) { return 0.0; }), 4.5);

  // D+x − D−x against (hbar/m) d log(rho_hat)/dx from the KDE, with the
  // finite-lag factor c applied to both quotients.
  const auto xs = ens.valid_positions(ens.time_index(0.5));
  const auto grad = kde_log_gradient(xs, fp.x_mean, silverman_bandwidth(xs));
  DerivativeField diff = fp;
  for (std::size_t j = 0; j < diff.bins.count; ++j) {
    diff.estimate[j] = (fp.estimate[j] - fm.estimate[j]) / c - grad[j];
    diff.stderr_[j] = std::hypot(fp.stderr_[j], fm.stderr_[j]) / c;
  }
  EXPECT_LT(max_abs_z(diff, [](double) { return 0.0; }), 4.5);
}

TEST(Derivatives, DriftOnlyIsExact) {
  // eps = 0, b = -x: Euler steps make every quotient at delta = dt exact.
  process::RunConfig rc = run_at(0.01, {0.0, 0.01, 0.02, 0.03}, 20000, 3);
  auto init = process::GaussianSampler::scalar(0.0, 1.0);
  const auto ens = process::simulate_nelson(sde::LinearField::constant({-1.0}), init, 0.0, rc);
  DerivativeSettings s;
  s.delta = 0.01;
  const auto f = forward_derivative(ens, 0.01, s);
  const auto target = conditional_mean(ens.positions(1), std::vector<double>(ens.positions(1).begin(), ens.positions(1).end()), f.bins);
  for (std::size_t j = 0; j < f.bins.count; ++j) {
    if (!f.reliable[j]) continue;
    EXPECT_NEAR(f.estimate[j], -target.mean[j], 1e-12);
    EXPECT_NEAR(f.stderr_[j] / target.stderr_[j], 1.0, 0.5);
  }
  const auto b = backward_derivative(ens, 0.01, s);
  for (std::size_t j = 0; j < b.bins.count; ++j)
    if (b.reliable[j]) EXPECT_NEAR(b.estimate[j], -target.mean[j] / 0.99, 1e-12);

  // b b' = x; the discrete compositions give x / (1 − dt) on both sides.
  const auto acc = stochastic_acceleration(ens, 0.01, s);
  for (std::size_t j = 0; j < acc.symmetric.bins.count; ++j) {
    if (!acc.symmetric.reliable[j]) continue;
    EXPECT_NEAR(acc.minus_of_plus.estimate[j], target.mean[j] / 0.99, 2e-3 * (1 + std::abs(target.mean[j])));
    EXPECT_NEAR(acc.plus_of_minus.estimate[j], target.mean[j] / 0.99, 2e-3 * (1 + std::abs(target.mean[j])));
  }
}

TEST(Derivatives, PhaseSpaceForwardIsVelocityPlusNoise) {
  const double dt = 0.001;
  process::ProcessSpec spec;
  spec.kind = process::Kind::phase_space;
  spec.beta = 100.0;
  const auto ens = process::run_catalog_process(spec, run_at(dt, {0.2, 0.2 + dt}, 50000, 9));
  DerivativeSettings s;
  s.delta = dt;
  const auto f = forward_derivative(ens, 0.2, s);
  const auto x = ens.positions(0), v = ens.velocities(0), a = ens.noise(0);
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = v[i] + a[i];
  const auto c = conditional_mean(x, w, f.bins);
  for (std::size_t j = 0; j < f.bins.count; ++j)
    if (f.reliable[j]) EXPECT_NEAR(f.estimate[j], c.mean[j], 1e-9 * (1 + std::abs(c.mean[j])));
}

TEST(Derivatives, LagValidation) {
  const auto ens = ho_ground_nelson(0.01, {0.1, 0.2}, 2000, 1);
  DerivativeSettings s;
  s.delta = 0.005;
  EXPECT_THROW(forward_derivative(ens, 0.1, s), InvalidArgument);
  s.delta = 0.1;
  EXPECT_THROW(backward_derivative(ens, 0.1, s), InvalidArgument);
  EXPECT_THROW(stochastic_acceleration(ens, 0.2, s), InvalidArgument);
  s.delta = -1.0;
  EXPECT_THROW(forward_derivative(ens, 0.1, s), InvalidArgument);
}

TEST(Acceleration, NewtonNelsonOnHoGround) {
  const double dt = 0.01, delta = 0.1, t = 0.5;
  const auto ens = ho_ground_nelson(dt, {t - delta, t, t + delta}, 400000, 55);
  DerivativeSettings s;
  s.delta = delta;
  const auto acc = stochastic_acceleration(ens, t, s);
  const double c2 = lag_factor(delta) * lag_factor(delta);
  const auto fit = fit_line(acc.symmetric);
  EXPECT_NEAR(fit.slope, -c2, 3 * fit.slope_stderr) << fit.slope_stderr;
  EXPECT_NEAR(fit.intercept, 0.0, 3 * fit.intercept_stderr);
  const auto res = newton_nelson_residual(acc.symmetric, [](double x) { return -x; });
  EXPECT_LT(res.norm, 3 * res.pooled_stderr);
  // Exchanging the composition order stays within the symmetric error.
  DerivativeField half = acc.symmetric;
  for (std::size_t j = 0; j < half.bins.count; ++j)
    half.estimate[j] = 0.5 * (acc.minus_of_plus.estimate[j] - acc.plus_of_minus.estimate[j]);
  const auto d = weighted_distance(half, [](double) { return 0.0; });
  EXPECT_LT(d.norm, d.pooled_stderr);
}

TEST(Acceleration, BrownianIsZero) {
  process::RunConfig rc = run_at(0.01, {0.9, 1.0, 1.1}, 200000, 8);
  auto init = process::GaussianSampler::scalar(0.0, 1.0);
  const auto ens = process::simulate_nelson(sde::LinearField::constant({0.0}), init, 1.0, rc);
  DerivativeSettings s;
  s.delta = 0.1;
  const auto acc = stochastic_acceleration(ens, 1.0, s);
  const auto res = newton_nelson_residual(acc.symmetric, [](double) { return 0.0; });
  EXPECT_LT(res.norm, 3 * res.pooled_stderr);
}

TEST(Acceleration, ResultIndependentOfThreads) {
  const auto ens = ho_ground_nelson(0.01, {0.4, 0.5, 0.6}, 20000, 2);
  DerivativeSettings s;
  s.delta = 0.1;
  s.threads = 1;
  const auto a1 = stochastic_acceleration(ens, 0.5, s);
  s.threads = 3;
  const auto a3 = stochastic_acceleration(ens, 0.5, s);
  for (std::size_t j = 0; j < a1.symmetric.bins.count; ++j) {
    EXPECT_EQ(std::memcmp(&a1.symmetric.estimate[j], &a3.symmetric.estimate[j], sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&a1.symmetric.stderr_[j], &a3.symmetric.stderr_[j], sizeof(double)), 0);
  }
}

// Fixed bins, delta ~ n^(-1/5): tenfold more trajectories should roughly
// halve the error against the exact drift.
TEST(Consistency, ForwardErrorShrinksWithSchedule) {
  const double dt = 0.001;
  auto error_at = [&](std::size_t n, double delta, std::uint64_t seed) {
    const auto ens = ho_ground_nelson(dt, {0.0, delta}, n, seed);
    DerivativeSettings s;
    s.delta = delta;
    s.bins = Bins::uniform(-2.0, 2.0, 40);
    return weighted_distance(forward_derivative(ens, 0.0, s), [](double x) { return -x; }).norm;
  };
  const double e1 = error_at(20000, 0.1, 61);
  const double e2 = error_at(200000, 0.063, 62);
  EXPECT_LT(e2, 0.6 * e1) << e1 << " -> " << e2;
}

TEST(Residual, NormWeightsAndFit) {
  DerivativeField f;
  f.bins = Bins::uniform(-1.0, 1.0, 4);
  f.estimate = {-0.75, -0.25, 0.25, 0.75};
  f.stderr_ = {0.1, 0.1, 0.1, 0.1};
  f.count = {100, 300, 300, 100};
  f.reliable = {1, 1, 1, 0};
  const auto r = newton_nelson_residual(f, [](double x) { return x - 0.5; });
  // Residual 0.5 in every bin; weights over the three reliable bins.
  EXPECT_NEAR(r.norm, 0.5, 1e-15);
  EXPECT_NEAR(r.pooled_stderr, 0.1, 1e-15);
  const auto fit = fit_line(f);
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(f.at(0.0), 0.0, 1e-15);
  EXPECT_NEAR(f.at(5.0), 0.25, 1e-15);  // constant past the last reliable center
}
