#include "stochmech/process/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stochmech/errors.hpp"
#include "stochmech/sde/noise_stream.hpp"

namespace stochmech::process {

using sde::NoiseStream;

GaussianSampler::GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
  if (cov.rows() != mean_.size() || cov.cols() != mean_.size())
    throw InvalidArgument("GaussianSampler: covariance shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("GaussianSampler: covariance not positive definite");
  chol_ = llt.matrixL();
}

std::shared_ptr<GaussianSampler> GaussianSampler::scalar(double mean, double variance) {
  return std::make_shared<GaussianSampler>(Eigen::VectorXd::Constant(1, mean),
                                           Eigen::MatrixXd::Constant(1, 1, variance));
}

void GaussianSampler::sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
                             std::span<double>) const {
  const auto n = mean_.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    NoiseStream s(seed, id, sde::channel::initial_state(static_cast<std::uint32_t>(p)));
    z(p) = s.normal();
  }
  const Eigen::VectorXd r = mean_ + chol_ * z;
  for (Eigen::Index p = 0; p < n; ++p) x[static_cast<std::size_t>(p)] = r(p);
}

GridDensitySampler::GridDensitySampler(std::vector<double> x, std::vector<double> density)
    : x_(std::move(x)), f_(std::move(density)) {
  if (x_.size() < 2 || x_.size() != f_.size()) throw InvalidArgument("GridDensitySampler: need >= 2 matching points");
  cdf_.assign(x_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    if (!(x_[i + 1] > x_[i])) throw InvalidArgument("GridDensitySampler: x must increase");
    if (f_[i] < 0.0) throw InvalidArgument("GridDensitySampler: negative density");
    cdf_[i + 1] = cdf_[i] + 0.5 * (f_[i] + f_[i + 1]) * (x_[i + 1] - x_[i]);
  }
  if (!(cdf_.back() > 0.0)) throw InvalidArgument("GridDensitySampler: zero mass");
}

double GridDensitySampler::quantile(double u) const {
  const double target = u * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t i = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
  i = std::min(i, x_.size() - 2);
  const double h = x_[i + 1] - x_[i];
  const double r = target - cdf_[i];
  const double f0 = f_[i], slope = (f_[i + 1] - f_[i]) / h;
  // Solve f0*d + slope*d^2/2 = r for d in [0, h].
  double d;
  if (std::abs(slope) * h < 1e-12 * std::max(f0, 1e-300)) {
    d = f0 > 0.0 ? r / f0 : 0.5 * h;
  } else {
    const double disc = std::max(f0 * f0 + 2.0 * slope * r, 0.0);
    d = 2.0 * r / (f0 + std::sqrt(disc));
  }
  return x_[i] + std::clamp(d, 0.0, h);
}

void GridDensitySampler::sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
                                std::span<double>) const {
  NoiseStream s(seed, id, sde::channel::initial_state(0));
  x[0] = quantile(s.uniform());
}

std::shared_ptr<sde::InitialSampler> density_sampler(const quantum::AnalyticState1D& state,
                                                     double t) {
  if (const auto* g = dynamic_cast<const quantum::GaussianState1D*>(&state))
    return GaussianSampler::scalar(g->mean(t), g->variance(t));
  // Tabulate on a wide grid in units of the oscillator length.
  const double len = std::sqrt(state.hbar() / state.mass());
  const std::size_t n = 8001;
  const double half = 12.0 * len;
  std::vector<double> xs(n), fs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    fs[i] = state.rho(xs[i], t);
  }
  return std::make_shared<GridDensitySampler>(std::move(xs), std::move(fs));
}

VelocityFamily parse_velocity_family(std::string_view name) {
  if (name == "gaussian_about_b") return VelocityFamily::gaussian_about_b;
  if (name == "two_point_about_b") return VelocityFamily::two_point_about_b;
  throw InvalidArgument("unknown velocity profile '" + std::string(name) + "'");
}

std::string_view velocity_family_name(VelocityFamily f) {
  return f == VelocityFamily::gaussian_about_b ? "gaussian_about_b" : "two_point_about_b";
}

PhaseSpaceSampler::PhaseSpaceSampler(std::shared_ptr<const sde::InitialSampler> positions,
                                     InitialDrift b0, VelocityInitProfile profile)
    : positions_(std::move(positions)), b0_(std::move(b0)), profile_(profile) {
  if (!positions_ || !b0_) throw InvalidArgument("PhaseSpaceSampler: sampler and drift required");
  if (!(profile_.spread >= 0.0)) throw InvalidArgument("velocity profile: spread must be >= 0");
}

void PhaseSpaceSampler::sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
                               std::span<double> v) const {
  positions_->sample(seed, id, x, v);
  b0_(x, v);
  if (profile_.spread == 0.0) return;
  for (std::size_t p = 0; p < x.size(); ++p) {
    NoiseStream s(seed, id, velocity_channel(static_cast<std::uint32_t>(p)));
    const double xi = profile_.family == VelocityFamily::gaussian_about_b
                          ? s.normal()
                          : (s.uniform() < 0.5 ? -1.0 : 1.0);
    v[p] += profile_.spread * xi;
  }
}

std::shared_ptr<PhaseSpaceSampler> construct_initial_phase_density(
    std::shared_ptr<const sde::InitialSampler> rho0, InitialDrift b0, VelocityInitProfile profile) {
  return std::make_shared<PhaseSpaceSampler>(std::move(rho0), std::move(b0), profile);
}

}  // namespace stochmech::process
