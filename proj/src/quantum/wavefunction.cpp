#include "stochmech/quantum/wavefunction.hpp"

#include <algorithm>
#include <cmath>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

std::vector<double> WavefunctionState::density() const {
  std::vector<double> r(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) r[i] = std::norm(psi[i]);
  return r;
}

double WavefunctionState::norm() const { return trapezoid(density(), grid.dx); }

void WavefunctionState::normalize() {
  const double s = norm();
  if (!(s > 0.0)) throw InvalidArgument("wavefunction: zero norm");
  const double f = 1.0 / std::sqrt(s);
  for (auto& p : psi) p *= f;
}

double WavefunctionState::edge_density() const {
  const std::size_t n = psi.size();
  double m = 0.0;
  for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1}) m = std::max(m, std::norm(psi[i]));
  return m;
}

std::vector<double> Wavefunction2D::density() const {
  std::vector<double> r(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) r[i] = std::norm(psi[i]);
  return r;
}

double Wavefunction2D::norm() const {
  // Periodic box with negligible edge density: the plain sum is the trapezoid.
  double s = 0.0;
  for (const auto& p : psi) s += std::norm(p);
  return s * grid.dx * grid.dx;
}

void Wavefunction2D::normalize() {
  const double s = norm();
  if (!(s > 0.0)) throw InvalidArgument("wavefunction: zero norm");
  const double f = 1.0 / std::sqrt(s);
  for (auto& p : psi) p *= f;
}

double Wavefunction2D::edge_density() const {
  const std::size_t n = grid.n;
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    m = std::max({m, std::norm(at(0, k)), std::norm(at(n - 1, k)), std::norm(at(k, 0)),
                  std::norm(at(k, n - 1))});
  }
  return m;
}

double overlap(const WavefunctionState& a, const WavefunctionState& b) {
  if (a.psi.size() != b.psi.size()) throw InvalidArgument("overlap: grid mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) s += std::conj(a.psi[i]) * b.psi[i];
  return std::abs(s) * a.grid.dx;
}

double overlap(const Wavefunction2D& a, const Wavefunction2D& b) {
  if (a.psi.size() != b.psi.size()) throw InvalidArgument("overlap: grid mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) s += std::conj(a.psi[i]) * b.psi[i];
  return std::abs(s) * a.grid.dx * a.grid.dx;
}

}  // namespace stochmech::quantum
