#include "stochmech/quantum/gaussian2d.hpp"

#include <cmath>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

namespace {
const cplx I{0.0, 1.0};
}

GaussianState2D::GaussianState2D(double mass, double hbar, double omega, Eigen::Matrix2cd m0,
                                 Eigen::Vector2cd c0, double t_start)
    : mass_(mass), hbar_(hbar), omega_(omega), m0_(std::move(m0)), c0_(std::move(c0)), t_start_(t_start) {
  if (!(mass > 0.0) || !(hbar > 0.0)) throw InvalidArgument("GaussianState2D: mass and hbar must be positive");
  if (!(omega >= 0.0)) throw InvalidArgument("GaussianState2D: omega must be >= 0");
  const Eigen::Matrix2d re = m0_.real();
  if (!(re(0, 0) > 0.0) || !(re.determinant() > 0.0))
    throw InvalidArgument("GaussianState2D: Re M0 must be positive definite");
}

// A(t) = cos(w t) + i (hbar/m) M0 sin(w t)/w; then M = (M0 cos + i m w/hbar sin) A^-1
// and c = A^-1 c0 (all functions of M0, so they commute).
Eigen::Matrix2cd GaussianState2D::A(double t) const {
  const double tau = t - t_start_;
  const double cw = omega_ > 0.0 ? std::cos(omega_ * tau) : 1.0;
  const double sw = omega_ > 0.0 ? std::sin(omega_ * tau) / omega_ : tau;
  return Eigen::Matrix2cd::Identity() * cw + I * (hbar_ / mass_) * sw * m0_;
}

Eigen::Matrix2cd GaussianState2D::M(double t) const {
  const double tau = t - t_start_;
  const double cw = omega_ > 0.0 ? std::cos(omega_ * tau) : 1.0;
  const double ws = omega_ > 0.0 ? omega_ * std::sin(omega_ * tau) : 0.0;
  const Eigen::Matrix2cd num = m0_ * cw + I * (mass_ / hbar_) * ws * Eigen::Matrix2cd::Identity();
  return num * A(t).inverse();
}

Eigen::Vector2cd GaussianState2D::propagate_linear(const Eigen::Vector2cd& v0, double t) const {
  return A(t).inverse() * v0;
}

Eigen::Vector2cd GaussianState2D::c(double t) const { return propagate_linear(c0_, t); }

Eigen::Matrix2d GaussianState2D::covariance(double t) const { return (2.0 * M(t).real()).inverse(); }

Eigen::Vector2d GaussianState2D::mean(double t) const {
  return covariance(t) * (2.0 * c(t).real());
}

Eigen::Matrix2d GaussianState2D::drift_matrix(double t) const {
  const Eigen::Matrix2cd m = M(t);
  return -(hbar_ / mass_) * (m.real() + m.imag());
}

Eigen::Vector2d GaussianState2D::drift_offset(double t) const {
  const Eigen::Vector2cd v = c(t);
  return (hbar_ / mass_) * (v.real() + v.imag());
}

GaussianState2D GaussianState2D::collapsed(std::size_t particle, double value, double width,
                                           double t) const {
  if (particle > 1) throw InvalidArgument("GaussianState2D: particle must be 0 or 1");
  if (!(width > 0.0)) throw InvalidArgument("GaussianState2D: window width must be positive");
  Eigen::Matrix2cd m = M(t);
  Eigen::Vector2cd v = c(t);
  const double k = 0.5 / (width * width);
  m(particle, particle) += k;
  v(particle) += k * value;
  return GaussianState2D(mass_, hbar_, omega_, m, v, t);
}

Wavefunction2D GaussianState2D::state(const Grid1D& grid, double t) const {
  const Eigen::Matrix2cd m = M(t);
  const Eigen::Vector2cd v = c(t);
  // Subtract the peak exponent to keep the samples finite.
  const Eigen::Vector2d mu = mean(t);
  const Eigen::Vector2cd mc = mu.cast<cplx>();
  const cplx e0 = -0.5 * (mc.transpose() * m * mc)(0, 0) + (v.transpose() * mc)(0, 0);
  Wavefunction2D s{grid, std::vector<cplx>(grid.n * grid.n), mass_, mass_, hbar_, t};
  for (std::size_t i = 0; i < grid.n; ++i)
    for (std::size_t j = 0; j < grid.n; ++j) {
      const Eigen::Vector2cd x(grid.x(i), grid.x(j));
      const cplx e = -0.5 * (x.transpose() * m * x)(0, 0) + (v.transpose() * x)(0, 0);
      s.at(i, j) = std::exp(e - cplx(e0.real(), 0.0));
    }
  s.normalize();
  return s;
}

}  // namespace stochmech::quantum
