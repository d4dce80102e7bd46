#include "stochmech/quantum/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::uint8_t> node_mask(std::span<const double> rho) {
  const double peak = *std::max_element(rho.begin(), rho.end());
  std::vector<std::uint8_t> mask(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) mask[i] = rho[i] > kNodeThreshold * peak;
  return mask;
}

}  // namespace

double DriftField::at(double x) const {
  const auto& g = b.grid;
  if (x < g.x0) return b_max;
  if (x > g.back()) return -b_max;
  return b.at(x);
}

void apply_node_clamp(std::vector<double>& values, std::span<const std::uint8_t> mask,
                      double b_max) {
  const std::size_t n = values.size();
  const auto segs = valid_segments(mask);
  if (segs.empty()) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (std::size_t i = 0; i < segs.front().begin; ++i) values[i] = b_max;
  for (std::size_t i = segs.back().end; i < n; ++i) values[i] = -b_max;
  for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
    const std::size_t lo = segs[s].end, hi = segs[s + 1].begin;
    // Gap [lo, hi): left half pushed left, right half pushed right.
    for (std::size_t i = lo; i < hi; ++i) values[i] = 2 * i + 1 < lo + hi ? -b_max : b_max;
  }
}

MadelungPair madelung_split(const WavefunctionState& state) {
  state.grid.validate();
  if (state.psi.size() != state.grid.n) throw InvalidArgument("madelung_split: psi size != grid size");
  MadelungPair out;
  out.hbar = state.hbar;
  out.rho.grid = out.S.grid = state.grid;
  out.rho.values = state.density();
  auto mask = node_mask(out.rho.values);
  // A node lying between two samples shows up as a phase step near pi across
  // one cell; both neighbours are treated as node points.
  for (std::size_t i = 0; i + 1 < state.grid.n; ++i) {
    if (!mask[i] || !mask[i + 1]) continue;
    const double step = std::abs(std::arg(state.psi[i + 1] / state.psi[i]));
    if (step > kNodePhaseStep) mask[i] = mask[i + 1] = 2;
  }
  for (auto& m : mask) m = m == 1;
  out.S.mask = mask;
  out.S.values.assign(state.grid.n, kNaN);
  for (const auto& seg : valid_segments(mask)) {
    double prev = std::arg(state.psi[seg.begin]);
    double offset = 0.0;
    out.S.values[seg.begin] = state.hbar * prev;
    for (std::size_t i = seg.begin + 1; i < seg.end; ++i) {
      const double ph = std::arg(state.psi[i]);
      double jump = ph - prev;
      if (jump > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
      else if (jump < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
      prev = ph;
      out.S.values[i] = state.hbar * (ph + offset);
    }
  }
  return out;
}

std::vector<cplx> reconstruct(const MadelungPair& pair) {
  std::vector<cplx> psi(pair.rho.values.size(), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!pair.S.valid(i)) continue;
    psi[i] = std::polar(std::sqrt(pair.rho.values[i]), pair.S.values[i] / pair.hbar);
  }
  return psi;
}

DriftField nelson_drift(const MadelungPair& pair, double mass, double hbar, double b_max) {
  if (!(mass > 0.0) || !(hbar > 0.0)) throw InvalidArgument("nelson_drift: mass and hbar must be positive");
  const auto& mask = pair.S.mask;
  const std::size_t n = pair.rho.values.size();
  // Osmotic part as (hbar/m) (sqrt rho)' / sqrt rho: sqrt rho stays smooth on
  // each valid segment next to a node, where log rho does not.
  std::vector<double> amp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (pair.S.valid(i)) amp[i] = std::sqrt(pair.rho.values[i]);
  const double h = pair.rho.grid.dx;
  const auto dS = derivative(pair.S.values, mask, h, 1);
  const auto damp = derivative(amp, mask, h, 1);
  DriftField out;
  out.b_max = b_max;
  out.b.grid = pair.rho.grid;
  out.b.mask = mask;
  out.b.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pair.S.valid(i)) continue;
    const double v = dS[i] / mass + hbar / mass * damp[i] / amp[i];
    out.b.values[i] = std::isfinite(v) ? std::clamp(v, -b_max, b_max) : 0.0;
  }
  if (!mask.empty()) apply_node_clamp(out.b.values, mask, b_max);
  return out;
}

ScalarField quantum_potential(const ScalarField& rho, double mass, double hbar) {
  if (!(mass > 0.0)) throw InvalidArgument("quantum_potential: mass must be positive");
  const std::size_t n = rho.values.size();
  auto mask = rho.mask.empty() ? node_mask(rho.values) : rho.mask;
  std::vector<double> amp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] && !(rho.values[i] > 0.0)) mask[i] = 0;
    if (mask[i]) amp[i] = std::sqrt(rho.values[i]);
  }
  const auto d2 = derivative(amp, mask, rho.grid.dx, 2);
  ScalarField q{rho.grid, std::vector<double>(n, kNaN), mask};
  const double c = hbar * hbar / (2.0 * mass);
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) q.values[i] = c * d2[i] / amp[i];
  return q;
}

namespace {

// d psi / d x_axis along one axis of the row-major 2-D array, fourth order
// centered with periodic wrap (the solver's box is periodic).
cplx axis_derivative(const Wavefunction2D& s, std::size_t i1, std::size_t i2, int axis) {
  const std::size_t n = s.grid.n;
  auto wrap = [n](std::size_t i, std::ptrdiff_t d) {
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i + n) + d) % n;
  };
  auto get = [&](std::ptrdiff_t d) {
    return axis == 0 ? s.at(wrap(i1, d), i2) : s.at(i1, wrap(i2, d));
  };
  return (get(-2) - 8.0 * get(-1) + 8.0 * get(1) - get(2)) / (12.0 * s.grid.dx);
}

}  // namespace

DriftField2D nelson_drift(const Wavefunction2D& state, double b_max) {
  const std::size_t n = state.grid.n;
  DriftField2D out;
  out.grid = state.grid;
  out.b_max = b_max;
  out.b1.assign(n * n, 0.0);
  out.b2.assign(n * n, 0.0);
  const auto rho = state.density();
  out.mask = node_mask(rho);
  // Off the mask the clamp points toward the density centroid.
  double c1 = 0.0, c2 = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double r = rho[i * n + j];
      c1 += r * state.grid.x(i);
      c2 += r * state.grid.x(j);
      tot += r;
    }
  c1 /= tot;
  c2 /= tot;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      if (!out.mask[k]) {
        out.b1[k] = state.grid.x(i) > c1 ? -b_max : b_max;
        out.b2[k] = state.grid.x(j) > c2 ? -b_max : b_max;
        continue;
      }
      const cplx psi = state.psi[k];
      const cplx r1 = axis_derivative(state, i, j, 0) / psi;
      const cplx r2 = axis_derivative(state, i, j, 1) / psi;
      out.b1[k] = std::clamp(state.hbar / state.mass1 * (r1.imag() + r1.real()), -b_max, b_max);
      out.b2[k] = std::clamp(state.hbar / state.mass2 * (r2.imag() + r2.real()), -b_max, b_max);
    }
  }
  return out;
}

void DriftField2D::at(double x1, double x2, double& out1, double& out2) const {
  const std::size_t n = grid.n;
  auto locate = [&](double x, std::size_t& i, double& w) {
    double u = (x - grid.x0) / grid.dx;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1) - 1e-12);
    i = static_cast<std::size_t>(u);
    w = u - static_cast<double>(i);
  };
  std::size_t i, j;
  double wi, wj;
  locate(x1, i, wi);
  locate(x2, j, wj);
  auto bil = [&](const std::vector<double>& f) {
    return (1 - wi) * ((1 - wj) * f[i * n + j] + wj * f[i * n + j + 1]) +
           wi * ((1 - wj) * f[(i + 1) * n + j] + wj * f[(i + 1) * n + j + 1]);
  };
  out1 = bil(b1);
  out2 = bil(b2);
}

}  // namespace stochmech::quantum
