#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "stats_util.hpp"
#include "stochmech/errors.hpp"
#include "stochmech/sde/ensemble.hpp"
#include "stochmech/sde/integrator.hpp"
#include "stochmech/sde/noise_stream.hpp"
#include "stochmech/sde/philox.hpp"
#include "stochmech/simd/kernels.hpp"

using namespace stochmech;
using namespace stochmech::sde;

namespace {

class GroundStateStart final : public InitialSampler {
 public:
  std::size_t particles() const override { return 1; }
  void sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
              std::span<double>) const override {
    NoiseStream s(seed, id, channel::initial_state(0));
    x[0] = std::sqrt(0.5) * s.normal();
  }
};

ProcessModel ground_state_nelson() {
  ProcessModel m;
  m.eps = {1.0};
  m.field = LinearField::constant({-1.0});
  m.init = std::make_shared<GroundStateStart>();
  return m;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}),
            (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NoiseStream, SameKeysGiveIdenticalSequences) {
  NoiseStream a(42, 17), b(42, 17);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
  NoiseStream c(42, 18), d(42, 17, 1);
  NoiseStream ref(42, 17);
  int equal_c = 0, equal_d = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = ref.normal();
    equal_c += (c.normal() == r);
    equal_d += (d.normal() == r);
  }
  EXPECT_EQ(equal_c, 0);
  EXPECT_EQ(equal_d, 0);
}

TEST(NoiseStream, DistinctStreamsAreUncorrelated) {
  const std::size_t n = 50000;
  NoiseStream a(9, 0), b(9, 1);
  double sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) sab += a.normal() * b.normal();
  EXPECT_LT(std::abs(sab / n), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(WienerIncrements, MomentsMatchDt) {
  NoiseStream s(1234, 0);
  const std::size_t n = 100000;
  const double dt = 0.01;
  const auto w = wiener_increments(s, n, dt);
  ASSERT_EQ(w.size(), n);
  EXPECT_LT(std::abs(testutil::mean(w)), 4.0 * std::sqrt(dt / n));
  EXPECT_NEAR(testutil::variance(w), dt, 0.05 * dt);
}

TEST(WienerIncrements, Deterministic) {
  NoiseStream a(5, 3), b(5, 3);
  EXPECT_EQ(wiener_increments(a, 100, 0.1), wiener_increments(b, 100, 0.1));
}

TEST(WienerIncrements, RejectsBadArguments) {
  NoiseStream s(1, 0);
  EXPECT_THROW(wiener_increments(s, 0, 0.1), InvalidArgument);
  EXPECT_THROW(wiener_increments(s, 10, 0.0), InvalidArgument);
  EXPECT_THROW(wiener_increments(s, 10, -1.0), InvalidArgument);
}

TEST(SimulateOu, StationaryVarianceAndDecayRate) {
  const double beta = 10.0, dt = 1e-3;
  IntegratorConfig cfg{dt, 50000};
  const std::size_t burn = static_cast<std::size_t>(10.0 / beta / dt);
  const std::size_t lag_stride = 10, n_lags = 20;  // lags up to 2/β
  double var_sum = 0.0;
  std::vector<double> cov(n_lags, 0.0);
  const int paths = 20;
  for (int p = 0; p < paths; ++p) {
    NoiseStream s(77, p);
    const auto a = simulate_ou(beta, 0.0, cfg, s);
    const std::size_t m = a.size() - burn;
    double v = 0.0;
    for (std::size_t i = burn; i < a.size(); ++i) v += a[i] * a[i];
    var_sum += v / m;
    for (std::size_t l = 0; l < n_lags; ++l) {
      const std::size_t lag = l * lag_stride;
      double c = 0.0;
      for (std::size_t i = burn; i + lag < a.size(); ++i) c += a[i] * a[i + lag];
      cov[l] += c / (a.size() - burn - lag);
    }
  }
  EXPECT_NEAR(var_sum / paths, beta / 2.0, 0.05 * beta / 2.0);
  std::vector<double> lags, logc;
  for (std::size_t l = 0; l < n_lags; ++l) {
    lags.push_back(l * lag_stride * dt);
    logc.push_back(std::log(cov[l] / paths));
  }
  const auto [slope, intercept] = testutil::linear_fit(lags, logc);
  EXPECT_NEAR(-slope, beta, 0.1 * beta);
  EXPECT_NEAR(std::exp(intercept), beta / 2.0, 0.1 * beta / 2.0);
}

TEST(SimulateOu, NoiselessPathIsExponentialDecay) {
  const double beta = 7.0;
  IntegratorConfig cfg{0.01, 300};
  NoiseStream s(1, 0);
  const auto a = simulate_ou(beta, 1.0, cfg, s, false);
  for (std::size_t k = 0; k < a.size(); k += 17)
    EXPECT_NEAR(a[k], std::exp(-beta * cfg.time_at(k)), 1e-13);
}

TEST(SimulateOu, EulerSchemeCrossCheck) {
  const double beta = 10.0;
  IntegratorConfig cfg{1e-3, 40000};
  cfg.ou_scheme = OuScheme::euler;
  double v = 0.0;
  std::size_t m = 0;
  for (int p = 0; p < 20; ++p) {
    NoiseStream s(3, p);
    const auto a = simulate_ou(beta, 0.0, cfg, s);
    for (std::size_t i = 1000; i < a.size(); ++i, ++m) v += a[i] * a[i];
  }
  EXPECT_NEAR(v / m, beta / 2.0, 0.05 * beta / 2.0);
}

TEST(SimulateOu, UnderResolvedStepIsRejected) {
  NoiseStream s(1, 0);
  EXPECT_THROW(simulate_ou(100.0, 0.0, IntegratorConfig{0.01, 10}, s), ConfigError);
  EXPECT_THROW(simulate_ou(0.0, 0.0, IntegratorConfig{0.01, 10}, s), InvalidArgument);
  EXPECT_NO_THROW(simulate_ou(100.0, 0.0, IntegratorConfig{0.001, 10}, s));
}

TEST(EulerMaruyama, ZeroDriftZeroDiffusionIsConstant) {
  NoiseStream s(1, 0);
  const auto tr = euler_maruyama([](double, double) { return 0.0; }, 0.0, 3.0,
                                 IntegratorConfig{0.1, 50}, s);
  ASSERT_EQ(tr.values.size(), 51u);
  for (double x : tr.values) EXPECT_EQ(x, 3.0);
}

TEST(EulerMaruyama, NonFiniteDriftFlagsTrajectory) {
  NoiseStream s(1, 0);
  const auto tr = euler_maruyama([](double x, double) { return 1e300 * (x + 1.0); }, 0.0, 1.0,
                                 IntegratorConfig{1.0, 10}, s);
  EXPECT_FALSE(tr.valid);
  EXPECT_GT(tr.first_invalid_step, 0u);
}

TEST(EulerMaruyama, LinearDriftStationaryVariance) {
  // dx = −ωx dt + ε dW, ω = ε = 1: stationary variance ε²/(2ω) = 0.5.
  auto model = ground_state_nelson();
  IntegratorConfig cfg{0.01, 1000};
  const auto ens = run_ensemble(model, 20000, 11, cfg, RecordPlan{{1000}});
  EXPECT_NEAR(testutil::variance(ens.positions(0)), 0.5, 0.05 * 0.5);
}

TEST(EulerMaruyama, BrownianVarianceGrowsLinearly) {
  ProcessModel m;
  m.eps = {1.0};
  m.field = LinearField::constant({0.0});
  m.init = std::make_shared<FixedStart>(std::vector<double>{0.0});
  IntegratorConfig cfg{0.01, 100};
  const auto ens = run_ensemble(m, 100000, 3, cfg, RecordPlan{{100}});
  EXPECT_NEAR(testutil::variance(ens.positions(0)), 1.0, 0.05);
}

TEST(RunEnsemble, FixedSeedIsReproducible) {
  auto model = ground_state_nelson();
  IntegratorConfig cfg{0.01, 200};
  const auto plan = RecordPlan::every(200, 50);
  const auto a = run_ensemble(model, 10000, 7, cfg, plan);
  const auto b = run_ensemble(model, 10000, 7, cfg, plan);
  EXPECT_TRUE(same_bits(a.x, b.x));
}

TEST(RunEnsemble, DifferentSeedsSameLaw) {
  auto model = ground_state_nelson();
  IntegratorConfig cfg{0.01, 200};
  const auto a = run_ensemble(model, 10000, 7, cfg, RecordPlan{{200}});
  const auto b = run_ensemble(model, 10000, 8, cfg, RecordPlan{{200}});
  EXPECT_FALSE(same_bits(a.x, b.x));
  const auto pa = a.positions(0), pb = b.positions(0);
  EXPECT_GT(testutil::ks_two_sample_p({pa.begin(), pa.end()}, {pb.begin(), pb.end()}), 0.01);
}

TEST(RunEnsemble, IndependentOfThreadsBlocksAndBackend) {
  auto model = ground_state_nelson();
  model.driving = Driving::colored;
  model.beta = {50.0};
  IntegratorConfig cfg{0.001, 300};
  const auto plan = RecordPlan::every(300, 100);
  const auto ref = run_ensemble(model, 3000, 5, cfg, plan, RunOptions{1, 512});
  const auto threaded = run_ensemble(model, 3000, 5, cfg, plan, RunOptions{3, 97});
  EXPECT_TRUE(same_bits(ref.x, threaded.x));
  EXPECT_TRUE(same_bits(ref.a, threaded.a));
  const auto saved = simd::active_backend();
  for (auto b : simd::available_backends()) {
    simd::set_active_backend(b);
    const auto other = run_ensemble(model, 3000, 5, cfg, plan, RunOptions{2, 256});
    EXPECT_TRUE(same_bits(ref.x, other.x)) << simd::backend_name(b);
  }
  simd::set_active_backend(saved);
}

TEST(RunEnsemble, SingleTrajectoryEqualsEulerMaruyama) {
  ProcessModel m;
  m.eps = {1.0};
  m.field = LinearField::constant({-1.0});
  m.init = std::make_shared<FixedStart>(std::vector<double>{0.3});
  IntegratorConfig cfg{0.01, 100};
  const auto ens = run_ensemble(m, 1, 99, cfg, RecordPlan::every(100, 1));
  NoiseStream s(99, 0);
  const auto tr = euler_maruyama([](double x, double) { return -x; }, 1.0, 0.3, cfg, s);
  ASSERT_EQ(tr.values.size(), ens.records());
  for (std::size_t k = 0; k < tr.values.size(); ++k) EXPECT_EQ(tr.values[k], ens.positions(k)[0]);
}

TEST(RunEnsemble, EscapesAreFlaggedNotKept) {
  ProcessModel m;
  m.eps = {1.0};
  m.field = LinearField::constant({0.0});
  m.init = std::make_shared<FixedStart>(std::vector<double>{0.0});
  m.lower = -0.5;
  m.upper = 0.5;
  IntegratorConfig cfg{0.01, 100};
  const auto ens = run_ensemble(m, 500, 1, cfg, RecordPlan{{0, 100}});
  EXPECT_GT(ens.invalid_count, 0u);
  EXPECT_LT(ens.first_invalid, 500u);
  for (std::size_t i = 0; i < 500; ++i) {
    if (!ens.valid[i]) EXPECT_TRUE(std::isnan(ens.positions(1)[i]));
  }
  EXPECT_EQ(ens.valid_positions(1).size(), 500u - ens.invalid_count);
}

TEST(RunEnsemble, RejectsBadConfiguration) {
  auto model = ground_state_nelson();
  EXPECT_THROW(run_ensemble(model, 0, 1, IntegratorConfig{0.01, 10}, RecordPlan{{10}}),
               InvalidArgument);
  model.driving = Driving::colored;
  model.beta = {100.0};
  EXPECT_THROW(run_ensemble(model, 10, 1, IntegratorConfig{0.01, 10}, RecordPlan{{10}}),
               ConfigError);
}
