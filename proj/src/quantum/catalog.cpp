#include "stochmech/quantum/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

namespace {

constexpr cplx I{0.0, 1.0};

void check_physical(double mass, double hbar) {
  if (!(mass > 0.0) || !(hbar > 0.0)) throw InvalidArgument("catalog: mass and hbar must be positive");
}

}  // namespace

double AnalyticState1D::drift(double x, double t, double b_max) const {
  const cplx r = log_derivative(x, t);
  const double b = hbar_ / mass_ * (r.imag() + r.real());
  if (!std::isfinite(b)) return 0.0;
  return std::clamp(b, -b_max, b_max);
}

double AnalyticState1D::current_velocity(double x, double t) const {
  return hbar_ / mass_ * log_derivative(x, t).imag();
}

WavefunctionState AnalyticState1D::state(const Grid1D& grid, double t) const {
  WavefunctionState s{grid, std::vector<cplx>(grid.n), mass_, hbar_, t};
  for (std::size_t i = 0; i < grid.n; ++i) s.psi[i] = psi(grid.x(i), t);
  return s;
}

std::vector<double> AnalyticState1D::potential_on(const Grid1D& grid) const {
  std::vector<double> u(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) u[i] = potential(grid.x(i));
  return u;
}

GaussianState1D::GaussianState1D(std::string name, double mass, double hbar, double omega, cplx a0,
                                 cplx c0, double t_start)
    : AnalyticState1D(mass, hbar), name_(std::move(name)), omega_(omega), a0_(a0), c0_(c0),
      t_start_(t_start) {
  check_physical(mass, hbar);
  if (omega < 0.0) throw InvalidArgument("catalog: omega must be non-negative");
  if (!(a0.real() > 0.0)) throw InvalidArgument("catalog: Gaussian needs Re a0 > 0");
}

cplx GaussianState1D::a(double t) const {
  const double tau = t - t_start_;
  if (omega_ == 0.0) return a0_ / (1.0 + I * (hbar_ / mass_) * a0_ * tau);
  const double kappa = mass_ * omega_ / hbar_;
  const cplx n0 = a0_ / kappa;
  const double c = std::cos(omega_ * tau), s = std::sin(omega_ * tau);
  return kappa * (n0 * c + I * s) / (c + I * n0 * s);
}

cplx GaussianState1D::c(double t) const {
  const double tau = t - t_start_;
  if (omega_ == 0.0) return c0_ / (1.0 + I * (hbar_ / mass_) * a0_ * tau);
  const double kappa = mass_ * omega_ / hbar_;
  const cplx n0 = a0_ / kappa;
  return c0_ / (std::cos(omega_ * tau) + I * n0 * std::sin(omega_ * tau));
}

double GaussianState1D::mean(double t) const { return c(t).real() / a(t).real(); }

double GaussianState1D::variance(double t) const { return 0.5 / a(t).real(); }

cplx GaussianState1D::psi(double x, double t) const {
  const cplx at = a(t), ct = c(t);
  const double ra = at.real(), rc = ct.real();
  const double re_d = -0.5 * (rc * rc / ra + 0.5 * std::log(std::numbers::pi / ra));
  return std::exp(-0.5 * at * x * x + ct * x + re_d);
}

cplx GaussianState1D::log_derivative(double x, double t) const { return -a(t) * x + c(t); }

double GaussianState1D::potential(double x) const {
  return 0.5 * mass_ * omega_ * omega_ * x * x;
}

HoSuperposition01::HoSuperposition01(double mass, double hbar, double omega)
    : AnalyticState1D(mass, hbar), omega_(omega), kappa_(mass * omega / hbar) {
  check_physical(mass, hbar);
  if (!(omega > 0.0)) throw InvalidArgument("catalog: omega must be positive");
}

cplx HoSuperposition01::psi(double x, double t) const {
  const double g0 = std::pow(kappa_ / std::numbers::pi, 0.25) * std::exp(-0.5 * kappa_ * x * x);
  const cplx rot = std::exp(-I * omega_ * t);
  return g0 * std::exp(-0.5 * I * omega_ * t) * (1.0 + std::sqrt(2.0 * kappa_) * x * rot) /
         std::numbers::sqrt2;
}

cplx HoSuperposition01::log_derivative(double x, double t) const {
  const cplx e = std::sqrt(2.0 * kappa_) * std::exp(-I * omega_ * t);
  return -kappa_ * x + e / (1.0 + e * x);
}

double HoSuperposition01::potential(double x) const {
  return 0.5 * mass_ * omega_ * omega_ * x * x;
}

TwoParticleGaussian::TwoParticleGaussian(const CatalogParams& p)
    : mass_(p.mass), hbar_(p.hbar), omega_(p.omega), kappa_(p.mass * p.omega / p.hbar) {
  check_physical(p.mass, p.hbar);
  if (!(p.omega > 0.0)) throw InvalidArgument("catalog: omega must be positive");
  n0_ << p.n0[0], p.n0[1], p.n0[1], p.n0[2];
  if (!(n0_(0, 0) > 0.0) || !(n0_.determinant() > 0.0))
    throw InvalidArgument("two_particle_gaussian: n0 must be positive definite");
}

Eigen::Matrix2cd TwoParticleGaussian::M(double t) const {
  const double c = std::cos(omega_ * t), s = std::sin(omega_ * t);
  const Eigen::Matrix2cd n0 = n0_.cast<cplx>();
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd num = n0 * c + I * s * id;
  const Eigen::Matrix2cd den = id * c + I * s * n0;
  return kappa_ * num * den.inverse();
}

Eigen::Matrix2d TwoParticleGaussian::covariance(double t) const {
  return (2.0 * M(t).real()).inverse();
}

double TwoParticleGaussian::rho(double x1, double x2, double t) const {
  const Eigen::Matrix2d re = M(t).real();
  const Eigen::Vector2d x(x1, x2);
  return std::sqrt(re.determinant()) / std::numbers::pi * std::exp(-x.dot(re * x));
}

cplx TwoParticleGaussian::psi(double x1, double x2, double t) const {
  const Eigen::Matrix2cd m = M(t);
  const Eigen::Vector2cd x(x1, x2);
  const double amp = std::pow(m.real().determinant(), 0.25) / std::sqrt(std::numbers::pi);
  return amp * std::exp(-0.5 * (x.transpose() * m * x)(0, 0));
}

Eigen::Matrix2d TwoParticleGaussian::drift_matrix(double t) const {
  const Eigen::Matrix2cd m = M(t);
  return -(hbar_ / mass_) * (m.real() + m.imag());
}

double TwoParticleGaussian::potential(double x1, double x2) const {
  return 0.5 * mass_ * omega_ * omega_ * (x1 * x1 + x2 * x2);
}

Wavefunction2D TwoParticleGaussian::state(const Grid1D& grid, double t) const {
  Wavefunction2D s{grid, std::vector<cplx>(grid.n * grid.n), mass_, mass_, hbar_, t};
  for (std::size_t i = 0; i < grid.n; ++i)
    for (std::size_t j = 0; j < grid.n; ++j) s.at(i, j) = psi(grid.x(i), grid.x(j), t);
  return s;
}

std::vector<double> TwoParticleGaussian::potential_on(const Grid1D& grid) const {
  std::vector<double> u(grid.n * grid.n);
  for (std::size_t i = 0; i < grid.n; ++i)
    for (std::size_t j = 0; j < grid.n; ++j) u[i * grid.n + j] = potential(grid.x(i), grid.x(j));
  return u;
}

GaussianState1D TwoParticleGaussian::conditional_second(double xbar1, double t1) const {
  const Eigen::Matrix2cd m = M(t1);
  return GaussianState1D("conditional", mass_, hbar_, omega_, m(1, 1), -m(0, 1) * xbar1, t1);
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"free_gaussian", "ho_ground", "ho_coherent",
                                                 "ho_superposition_01", "two_particle_gaussian"};
  return names;
}

bool is_two_particle(std::string_view name) { return name == "two_particle_gaussian"; }

std::unique_ptr<AnalyticState1D> make_analytic(std::string_view name, const CatalogParams& p) {
  check_physical(p.mass, p.hbar);
  const double kappa = p.mass * p.omega / p.hbar;
  if (name == "free_gaussian") {
    if (!(p.sigma0 > 0.0)) throw InvalidArgument("free_gaussian: sigma0 must be positive");
    const double a0 = 0.5 / (p.sigma0 * p.sigma0);
    return std::make_unique<GaussianState1D>("free_gaussian", p.mass, p.hbar, 0.0, a0,
                                             a0 * p.x0 + I * p.p0 / p.hbar);
  }
  if (name == "ho_ground" || name == "ho_coherent") {
    if (!(p.omega > 0.0)) throw InvalidArgument(std::string(name) + ": omega must be positive");
    const double shift = name == "ho_coherent" ? p.x0 : 0.0;
    return std::make_unique<GaussianState1D>(std::string(name), p.mass, p.hbar, p.omega, kappa,
                                             kappa * shift);
  }
  if (name == "ho_superposition_01") return std::make_unique<HoSuperposition01>(p.mass, p.hbar, p.omega);
  if (is_two_particle(name))
    throw InvalidArgument("two_particle_gaussian is a two-particle state; use TwoParticleGaussian");
  throw InvalidArgument("unknown catalog state '" + std::string(name) + "'");
}

AnalyticSnapshot analytic_state(std::string_view name, const CatalogParams& p, double t,
                                const Grid1D& grid) {
  grid.validate();
  const auto st = make_analytic(name, p);
  AnalyticSnapshot out;
  out.state = st->state(grid, t);
  out.pair = madelung_split(out.state);
  out.drift.b.grid = grid;
  out.drift.b.mask = out.pair.S.mask;
  out.drift.b.values.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i)
    if (out.pair.S.valid(i)) out.drift.b.values[i] = st->drift(grid.x(i), t);
  apply_node_clamp(out.drift.b.values, out.drift.b.mask, out.drift.b_max);
  return out;
}

}  // namespace stochmech::quantum
