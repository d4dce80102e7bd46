#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stochmech/errors.hpp"
#include "stochmech/quantum/catalog.hpp"
#include "stochmech/quantum/grid.hpp"
#include "stochmech/quantum/madelung.hpp"
#include "stochmech/quantum/split_step.hpp"

using namespace stochmech;
using namespace stochmech::quantum;
using std::numbers::pi;

namespace {

double l1_relative(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::abs(a[i] - b[i]);
    den += std::abs(b[i]);
  }
  return num / den;
}

WavefunctionState from_function(const Grid1D& g, auto f) {
  WavefunctionState s{g, std::vector<cplx>(g.n)};
  for (std::size_t i = 0; i < g.n; ++i) s.psi[i] = f(g.x(i));
  s.normalize();
  return s;
}

}  // namespace

TEST(Grid, FourthOrderDerivativesConverge) {
  double prev1 = 0.0, prev2 = 0.0;
  for (std::size_t n : {32u, 64u}) {
    const Grid1D g{0.0, 1.0 / static_cast<double>(n - 1), n};
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(3.0 * g.x(i));
    const auto d1 = derivative(f, {}, g.dx, 1);
    const auto d2 = derivative(f, {}, g.dx, 2);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e1 = std::max(e1, std::abs(d1[i] - 3.0 * std::cos(3.0 * g.x(i))));
      e2 = std::max(e2, std::abs(d2[i] + 9.0 * std::sin(3.0 * g.x(i))));
    }
    if (prev1 > 0.0) {
      EXPECT_GT(prev1 / e1, 12.0);
      EXPECT_GT(prev2 / e2, 8.0);
    }
    prev1 = e1;
    prev2 = e2;
  }
}

TEST(Grid, DerivativeRespectsMaskSegments) {
  std::vector<double> f = {0, 1, 2, 3, 4, 100, 100, 7, 8, 9, 10, 11};
  std::vector<std::uint8_t> m = {1, 1, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1};
  const auto d = derivative(f, m, 1.0, 1);
  for (std::size_t i : {0u, 1u, 2u, 3u, 4u, 7u, 8u, 9u, 10u, 11u}) EXPECT_NEAR(d[i], 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(d[5]));
  EXPECT_EQ(valid_segments(m).size(), 2u);
}

TEST(Madelung, PlaneWavePhaseIsLinear) {
  const Grid1D g{0.0, 2.0 * pi / 128.0, 128};
  const double p = 5.0;
  const auto s = from_function(g, [&](double x) { return std::polar(1.0, p * x); });
  const auto pair = madelung_split(s);
  for (std::size_t i = 1; i < g.n; ++i)
    EXPECT_NEAR(pair.S.values[i] - pair.S.values[0], p * (g.x(i) - g.x(0)), 1e-10);
  const auto b = nelson_drift(pair, 1.0, 1.0);
  for (std::size_t i = 0; i < g.n; ++i) EXPECT_NEAR(b.b.values[i], p, 1e-8);
  EXPECT_NEAR(pair.rho.integral(), 1.0, 1e-12);
}

TEST(Madelung, RealGaussianHasConstantPhase) {
  const auto g = Grid1D::centered(10.0, 256);
  const auto s = from_function(g, [](double x) { return cplx(std::exp(-x * x / 2.0)); });
  const auto pair = madelung_split(s);
  for (std::size_t i = 0; i < g.n; ++i)
    if (pair.S.valid(i)) EXPECT_NEAR(pair.S.values[i], 0.0, 1e-14);
}

TEST(Madelung, FirstExcitedNodeExcludedFromMask) {
  const auto g = Grid1D::centered(8.0, 256);  // x = 0 is a grid point
  const auto s = from_function(g, [](double x) { return cplx(x * std::exp(-x * x / 2.0)); });
  const auto pair = madelung_split(s);
  const std::size_t zero = g.n / 2;
  ASSERT_NEAR(g.x(zero), 0.0, 1e-15);
  EXPECT_FALSE(pair.S.valid(zero));
  EXPECT_TRUE(pair.S.valid(zero + 1));
  EXPECT_TRUE(pair.S.valid(zero - 1));
  // The two lobes carry phases differing by pi; each is constant on its side.
  EXPECT_NEAR(pair.S.values[zero + 1] - pair.S.values[zero + 20], 0.0, 1e-14);
  // Clamp at the node pushes away from it: only the node point is masked, so
  // it is the left half of a one-point gap.
  const auto b = nelson_drift(pair, 1.0, 1.0);
  EXPECT_EQ(std::abs(b.b.values[zero]), kDriftClamp);
  EXPECT_TRUE(std::isfinite(b.at(0.0)));
}

TEST(Madelung, ClampPointsAwayFromNodesAndBackIntoSupport) {
  std::vector<double> v(10, 0.5);
  std::vector<std::uint8_t> m = {0, 0, 1, 1, 0, 0, 0, 0, 1, 0};
  apply_node_clamp(v, m, 7.0);
  EXPECT_EQ(v[0], 7.0);
  EXPECT_EQ(v[1], 7.0);
  EXPECT_EQ(v[2], 0.5);
  EXPECT_EQ(v[4], -7.0);
  EXPECT_EQ(v[5], -7.0);
  EXPECT_EQ(v[6], 7.0);
  EXPECT_EQ(v[7], 7.0);
  EXPECT_EQ(v[9], -7.0);
}

TEST(Madelung, RoundTripReproducesPsi) {
  const auto g = Grid1D::centered(12.0, 512);
  const auto st = make_analytic("ho_superposition_01", {});
  const auto s = st->state(g, 0.7);
  const auto pair = madelung_split(s);
  const auto back = reconstruct(pair);
  // Global phase from the first valid point.
  std::size_t ref = 0;
  while (!pair.S.valid(ref)) ++ref;
  const cplx phase = s.psi[ref] / back[ref] * std::abs(back[ref]) / std::abs(s.psi[ref]);
  for (std::size_t i = 0; i < g.n; ++i)
    if (pair.S.valid(i)) EXPECT_LT(std::abs(phase * back[i] - s.psi[i]), 1e-8);
}

TEST(NelsonDrift, HoGroundIsMinusX) {
  const auto g = Grid1D::centered(8.0, 256);
  const auto s = from_function(g, [](double x) { return cplx(std::exp(-x * x / 2.0)); });
  const auto b = nelson_drift(madelung_split(s), 1.0, 1.0);
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::abs(g.x(i)) < 3.0) EXPECT_NEAR(b.b.values[i], -g.x(i), 1e-4);
}

TEST(NelsonDrift, FreeGaussianAtTimeZero) {
  const double sigma0 = 0.7, m = 2.0, hbar = 1.5;
  const auto g = Grid1D::centered(8.0, 400);
  const auto s = from_function(g, [&](double x) { return cplx(std::exp(-x * x / (4 * sigma0 * sigma0))); });
  const auto b = nelson_drift(madelung_split(s), m, hbar);
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::abs(g.x(i)) < 3.0 * sigma0)
      EXPECT_NEAR(b.b.values[i], -hbar * g.x(i) / (2 * m * sigma0 * sigma0), 1e-4);
}

TEST(QuantumPotential, HoGroundAndFlatDensity) {
  const auto g = Grid1D::centered(8.0, 512);
  const auto s = from_function(g, [](double x) { return cplx(std::exp(-x * x / 2.0)); });
  const auto q = quantum_potential(madelung_split(s).rho, 1.0, 1.0);
  for (std::size_t i = 0; i < g.n; ++i)
    if (q.valid(i) && std::abs(g.x(i)) < 4.0) EXPECT_NEAR(q.values[i], g.x(i) * g.x(i) / 2 - 0.5, 1e-5 * (1 + g.x(i) * g.x(i)));
  ScalarField flat{g, std::vector<double>(g.n, 1.0 / g.length()), {}};
  const auto q0 = quantum_potential(flat, 1.0, 1.0);
  for (double v : q0.values) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Catalog, ListsAllKeysAndRejectsUnknown) {
  EXPECT_EQ(catalog_names().size(), 5u);
  EXPECT_THROW(make_analytic("nope", {}), InvalidArgument);
  EXPECT_THROW(make_analytic("two_particle_gaussian", {}), InvalidArgument);
  EXPECT_THROW(analytic_state("nope", {}, 0.0, Grid1D::centered(5, 64)), InvalidArgument);
}

TEST(Catalog, HoGroundIsStationaryWithLinearDrift) {
  const auto st = make_analytic("ho_ground", {});
  for (double t : {0.0, 0.9, 3.3}) {
    for (double x : {-2.0, -0.3, 0.0, 1.7}) {
      EXPECT_NEAR(st->rho(x, t), std::exp(-x * x) / std::sqrt(pi), 1e-14);
      EXPECT_NEAR(st->drift(x, t), -x, 1e-14);
    }
  }
}

TEST(Catalog, CoherentStateOscillatesWithFixedWidth) {
  CatalogParams p;
  p.x0 = 1.5;
  p.omega = 2.0;
  const auto st = make_analytic("ho_coherent", p);
  const double kappa = p.mass * p.omega / p.hbar;
  for (double t : {0.0, 0.4, 1.3}) {
    const double c = p.x0 * std::cos(p.omega * t);
    for (double x : {-1.0, 0.2, 2.0})
      EXPECT_NEAR(st->rho(x, t), std::sqrt(kappa / pi) * std::exp(-kappa * (x - c) * (x - c)), 1e-13);
  }
}

TEST(Catalog, FreeGaussianDriftAndSpreading) {
  CatalogParams p;
  p.sigma0 = 0.8;
  p.mass = 1.3;
  const auto snap = analytic_state("free_gaussian", p, 0.0, Grid1D::centered(10, 256));
  for (std::size_t i = 0; i < snap.drift.b.grid.n; ++i)
    if (snap.drift.b.valid(i))
      EXPECT_NEAR(snap.drift.b.values[i], -snap.drift.b.grid.x(i) / (2 * p.mass * 0.64), 1e-12);
  const auto st = make_analytic("free_gaussian", p);
  const auto& gs = dynamic_cast<const GaussianState1D&>(*st);
  for (double t : {0.5, 2.0}) {
    const double u = t / (2 * p.mass * 0.64);
    EXPECT_NEAR(gs.variance(t), 0.64 * (1 + u * u), 1e-12);
  }
}

TEST(Catalog, AnalyticDriftMatchesGridDrift) {
  const auto g = Grid1D::centered(10.0, 512);
  CatalogParams p;
  p.x0 = 1.0;
  p.p0 = 0.5;
  for (const char* name : {"free_gaussian", "ho_coherent", "ho_superposition_01"}) {
    for (double t : {0.3, 1.1}) {
      const auto snap = analytic_state(name, p, t, g);
      const auto fd = nelson_drift(snap.pair, p.mass, p.hbar);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < g.n; ++i) {
        if (!snap.pair.S.valid(i)) continue;
        const double w = snap.pair.rho.values[i];
        num += w * std::abs(fd.b.values[i] - snap.drift.b.values[i]);
        den += w * std::abs(snap.drift.b.values[i]);
      }
      EXPECT_LT(num / den, 1e-4) << name << " t=" << t;
    }
  }
}

TEST(Catalog, ContinuityEquationHolds) {
  CatalogParams p;
  p.x0 = 1.2;
  const auto st = make_analytic("ho_superposition_01", p);
  const double h = 1e-4, t = 0.8;
  for (double x : {-1.5, -0.2, 0.6, 1.9}) {
    const double drho_dt = (st->rho(x, t + h) - st->rho(x, t - h)) / (2 * h);
    auto flux = [&](double y) { return st->rho(y, t) * st->current_velocity(y, t); };
    const double dflux = (flux(x + h) - flux(x - h)) / (2 * h);
    EXPECT_NEAR(drho_dt + dflux, 0.0, 1e-7);
  }
}

TEST(Catalog, SuperpositionNodeDriftIsClamped) {
  const auto st = make_analytic("ho_superposition_01", {});
  // At t = 0 the node sits at x = -1/sqrt(2).
  const double node = -1.0 / std::sqrt(2.0);
  EXPECT_LT(st->rho(node, 0.0), 1e-30);
  EXPECT_LE(std::abs(st->drift(node + 1e-9, 0.0)), kDriftClamp);
  EXPECT_GT(st->drift(node + 1e-4, 0.0), 100.0);
  EXPECT_LT(st->drift(node - 1e-4, 0.0), -100.0);
}

TEST(TwoParticle, CovarianceAndConditioning) {
  const TwoParticleGaussian tp(CatalogParams{});
  const Eigen::Matrix2d s0 = tp.covariance(0.0);
  Eigen::Matrix2d n0;
  n0 << 1.0, 0.6, 0.6, 1.0;
  EXPECT_LT((s0 - (2.0 * n0).inverse()).norm(), 1e-14);
  // Conditional mean of x2 at t1 given x1 = xbar: Gaussian conditioning.
  const double t1 = 1.0, xbar = 0.8;
  const Eigen::Matrix2d s1 = tp.covariance(t1);
  const auto cond = tp.conditional_second(xbar, t1);
  EXPECT_NEAR(cond.mean(t1), s1(1, 0) / s1(0, 0) * xbar, 1e-12);
  EXPECT_NEAR(cond.variance(t1), s1(1, 1) - s1(0, 1) * s1(0, 1) / s1(0, 0), 1e-12);
  // Marginal density integrates to one.
  double tot = 0.0;
  const double h = 0.05;
  for (double a = -7; a < 7; a += h)
    for (double b = -7; b < 7; b += h) tot += tp.rho(a, b, 0.5) * h * h;
  EXPECT_NEAR(tot, 1.0, 1e-8);
}

TEST(TwoParticle, GridDriftMatchesDriftMatrix) {
  const TwoParticleGaussian tp(CatalogParams{});
  const auto g = Grid1D::centered(7.0, 256);
  const auto s = tp.state(g, 0.6);
  EXPECT_NEAR(s.norm(), 1.0, 1e-10);
  const auto b = nelson_drift(s);
  const Eigen::Matrix2d dm = tp.drift_matrix(0.6);
  for (double x1 : {-1.0, 0.25, 1.5}) {
    for (double x2 : {-0.5, 0.75}) {
      double b1, b2;
      // Evaluate exactly at grid points to avoid interpolation error.
      const double gx1 = g.x(static_cast<std::size_t>(std::lround((x1 - g.x0) / g.dx)));
      const double gx2 = g.x(static_cast<std::size_t>(std::lround((x2 - g.x0) / g.dx)));
      b.at(gx1, gx2, b1, b2);
      const Eigen::Vector2d ref = dm * Eigen::Vector2d(gx1, gx2);
      EXPECT_NEAR(b1, ref(0), 1e-4);
      EXPECT_NEAR(b2, ref(1), 1e-4);
    }
  }
}

TEST(SplitStep, HoGroundOnePeriodFidelity) {
  const auto g = Grid1D::centered(10.0, 256);
  const auto st = make_analytic("ho_ground", {});
  const auto s0 = st->state(g, 0.0);
  const auto states = schrodinger_evolve(s0, st->potential_on(g), 2 * pi / 4000, 2 * pi);
  EXPECT_GT(overlap(s0, states.back()), 1.0 - 1e-6);
  EXPECT_NEAR(states.back().norm(), 1.0, 1e-8 * 2 * pi);
}

TEST(SplitStep, FreeGaussianWidthLaw) {
  CatalogParams p;
  p.sigma0 = 1.0;
  const auto g = Grid1D::centered(40.0, 1024);
  const auto st = make_analytic("free_gaussian", p);
  const auto states = schrodinger_evolve(st->state(g, 0.0), st->potential_on(g), 0.01, 4.0, 100);
  for (const auto& s : states) {
    const auto r = s.density();
    double m2 = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) m2 += r[i] * g.x(i) * g.x(i) * g.dx;
    const double u = s.t / 2.0;
    EXPECT_NEAR(m2 / (1 + u * u), 1.0, 1e-3) << "t=" << s.t;
  }
}

TEST(SplitStep, SingleFourierModePhaseRotation) {
  const Grid1D g{0.0, 2 * pi / 64, 64};
  const double k = 3.0, t = 0.7;
  const auto s0 = from_function(g, [&](double x) { return std::polar(1.0, k * x); });
  const auto out = schrodinger_evolve(s0, std::vector<double>(g.n, 0.0), 0.01, t).back();
  const cplx rot = std::polar(1.0, -k * k * t / 2);
  for (std::size_t i = 0; i < g.n; ++i) EXPECT_LT(std::abs(out.psi[i] - rot * s0.psi[i]), 1e-12);
}

TEST(SplitStep, OracleConsistencyWithCatalog) {
  const auto g = Grid1D::centered(12.0, 512);
  CatalogParams p;
  p.x0 = 1.0;
  p.sigma0 = 0.8;
  for (const char* name : {"ho_coherent", "ho_superposition_01", "free_gaussian"}) {
    const auto st = make_analytic(name, p);
    const auto states = schrodinger_evolve(st->state(g, 0.0), st->potential_on(g), 0.002, 3.0, 250);
    for (const auto& s : states) {
      const auto ref = st->state(g, s.t);
      EXPECT_LT(l1_relative(s.density(), ref.density()), 1e-3) << name << " t=" << s.t;
      const auto bn = nelson_drift(madelung_split(s), p.mass, p.hbar);
      const auto ba = analytic_state(name, p, s.t, g).drift;
      double num = 0.0, den = 0.0;
      const auto r = ref.density();
      for (std::size_t i = 0; i < g.n; ++i) {
        if (!bn.b.valid(i) || !ba.b.valid(i)) continue;
        num += r[i] * std::abs(bn.b.values[i] - ba.b.values[i]);
        den += r[i] * std::abs(ba.b.values[i]);
      }
      if (den > 1e-3) EXPECT_LT(num / den, 1e-3) << name << " t=" << s.t;
    }
  }
}

TEST(SplitStep, TwoParticleMatchesAnalytic) {
  const TwoParticleGaussian tp(CatalogParams{});
  const auto g = Grid1D::centered(8.0, 128);
  const auto states = schrodinger_evolve(tp.state(g, 0.0), tp.potential_on(g), 0.005, 2.0, 100);
  ASSERT_EQ(states.size(), 5u);
  for (const auto& s : states) {
    const auto ref = tp.state(g, s.t);
    EXPECT_GT(overlap(s, ref), 1.0 - 1e-6) << "t=" << s.t;
    EXPECT_LT(s.edge_density(), 1e-10);
  }
}

TEST(SplitStep, RejectsBadInput) {
  const auto g = Grid1D::centered(5.0, 64);
  const auto s = make_analytic("ho_ground", {})->state(g, 0.0);
  EXPECT_THROW(schrodinger_evolve(s, std::vector<double>(10, 0.0), 0.01, 1.0), InvalidArgument);
  EXPECT_THROW(schrodinger_evolve(s, std::vector<double>(g.n, 0.0), 0.03, 1.0), InvalidArgument);
  std::vector<double> bad(g.n, 0.0);
  bad[3] = std::nan("");
  EXPECT_THROW(schrodinger_evolve(s, bad, 0.01, 1.0), StepSizeError);
}

TEST(Madelung, NodeBetweenSamplesIsMasked) {
  const auto g = Grid1D::centered(8.0, 300);
  const auto s = make_analytic("ho_superposition_01", {})->state(g, 0.0);
  const auto pair = madelung_split(s);
  const double node = -1.0 / std::sqrt(2.0);
  const auto i = static_cast<std::size_t>((node - g.x0) / g.dx);
  ASSERT_LT(g.x(i), node);
  ASSERT_GT(g.x(i + 1), node);
  EXPECT_FALSE(pair.S.valid(i));
  EXPECT_FALSE(pair.S.valid(i + 1));
  EXPECT_TRUE(pair.S.valid(i + 3));
  const auto b = nelson_drift(pair, 1.0, 1.0);
  EXPECT_EQ(b.b.values[i], -kDriftClamp);
  EXPECT_EQ(b.b.values[i + 1], kDriftClamp);
}
