#include "stochmech/quantum/split_step.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

namespace {

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

// Plain complex product; operator* goes through the Annex G slow path.
void multiply(std::vector<cplx>& a, const std::vector<cplx>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag(), br = b[i].real(), bi = b[i].imag();
    a[i] = cplx(ar * br - ai * bi, ar * bi + ai * br);
  }
}

std::size_t step_count(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw InvalidArgument("schrodinger_evolve: dt > 0 and horizon >= 0 required");
  const double r = horizon / dt;
  const auto n = static_cast<std::size_t>(std::llround(r));
  if (std::abs(r - static_cast<double>(n)) > 1e-6 * std::max(1.0, r))
    throw InvalidArgument("schrodinger_evolve: horizon must be a multiple of dt");
  return n;
}

void check_norm(double norm0, double norm, double elapsed) {
  if (!std::isfinite(norm)) throw StepSizeError("non-finite wavefunction");
  const double rate = std::abs(norm - norm0) / std::max(elapsed, 1.0);
  if (rate > kMaxNormDriftRate)
    throw StepSizeError(
                        "norm drift " + std::to_string(rate) + " per unit time exceeds 1e-6");
}

}  // namespace

std::vector<double> fft_wavenumbers(std::size_t n, double length) {
  std::vector<double> k(n);
  const double base = 2.0 * std::numbers::pi / length;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<double>(i) - (i < (n + 1) / 2 ? 0.0 : static_cast<double>(n));
    k[i] = base * j;
  }
  return k;
}

struct SplitStep1D::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

SplitStep1D::SplitStep1D(WavefunctionState initial, std::vector<double> potential, double dt)
    : state_(std::move(initial)), dt_(dt), plans_(std::make_unique<Plans>()) {
  state_.grid.validate();
  const std::size_t n = state_.grid.n;
  if (state_.psi.size() != n || potential.size() != n)
    throw InvalidArgument("SplitStep1D: psi and potential must match the grid");
  if (!(dt > 0.0)) throw InvalidArgument("SplitStep1D: dt must be positive");
  half_kick_.resize(n);
  kinetic_.resize(n);
  const double hb = state_.hbar, m = state_.mass;
  const auto k = fft_wavenumbers(n, state_.grid.length());
  for (std::size_t i = 0; i < n; ++i) {
    half_kick_[i] = std::polar(1.0, -potential[i] * dt / (2.0 * hb));
    // 1/n folds the unnormalized inverse transform into the kinetic factor.
    kinetic_[i] = std::polar(1.0 / static_cast<double>(n), -hb * k[i] * k[i] * dt / (2.0 * m));
  }
  std::lock_guard lock(fftw_planner_mutex());
  auto* p = as_fftw(state_.psi.data());
  plans_->fwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
}

SplitStep1D::~SplitStep1D() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
}

void SplitStep1D::step(std::size_t steps) {
  auto& psi = state_.psi;
  const std::size_t n = psi.size();
  for (std::size_t s = 0; s < steps; ++s) {
    multiply(psi, half_kick_);
    fftw_execute(plans_->fwd);
    multiply(psi, kinetic_);
    fftw_execute(plans_->bwd);
    multiply(psi, half_kick_);
  }
  state_.t += dt_ * static_cast<double>(steps);
}

struct SplitStep2D::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

SplitStep2D::SplitStep2D(Wavefunction2D initial, std::vector<double> potential, double dt)
    : state_(std::move(initial)), dt_(dt), plans_(std::make_unique<Plans>()) {
  state_.grid.validate();
  const std::size_t n = state_.grid.n;
  if (state_.psi.size() != n * n || potential.size() != n * n)
    throw InvalidArgument("SplitStep2D: psi and potential must match the grid");
  if (!(dt > 0.0)) throw InvalidArgument("SplitStep2D: dt must be positive");
  half_kick_.resize(n * n);
  kinetic_.resize(n * n);
  const double hb = state_.hbar;
  const auto k = fft_wavenumbers(n, state_.grid.length());
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t q = i * n + j;
      half_kick_[q] = std::polar(1.0, -potential[q] * dt / (2.0 * hb));
      const double e = hb * (k[i] * k[i] / state_.mass1 + k[j] * k[j] / state_.mass2) / 2.0;
      kinetic_[q] = std::polar(norm, -e * dt);
    }
  }
  std::lock_guard lock(fftw_planner_mutex());
  auto* p = as_fftw(state_.psi.data());
  const int ni = static_cast<int>(n);
  plans_->fwd = fftw_plan_dft_2d(ni, ni, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_2d(ni, ni, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
}

SplitStep2D::~SplitStep2D() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
}

void SplitStep2D::step(std::size_t steps) {
  auto& psi = state_.psi;
  const std::size_t n = psi.size();
  for (std::size_t s = 0; s < steps; ++s) {
    multiply(psi, half_kick_);
    fftw_execute(plans_->fwd);
    multiply(psi, kinetic_);
    fftw_execute(plans_->bwd);
    multiply(psi, half_kick_);
  }
  state_.t += dt_ * static_cast<double>(steps);
}

namespace {

template <class Solver, class State>
std::vector<State> evolve(const State& initial, std::span<const double> potential, double dt,
                          double horizon, std::size_t record_every) {
  const std::size_t total = step_count(dt, horizon);
  Solver solver(initial, std::vector<double>(potential.begin(), potential.end()), dt);
  const double norm0 = initial.norm();
  std::vector<State> out{initial};
  const std::size_t stride = record_every == 0 ? std::max<std::size_t>(total, 1) : record_every;
  std::size_t done = 0;
  while (done < total) {
    const std::size_t chunk = std::min(stride, total - done);
    solver.step(chunk);
    done += chunk;
    check_norm(norm0, solver.state().norm(), dt * static_cast<double>(done));
    out.push_back(solver.state());
  }
  return out;
}

}  // namespace

std::vector<WavefunctionState> schrodinger_evolve(const WavefunctionState& initial,
                                                  std::span<const double> potential, double dt,
                                                  double horizon, std::size_t record_every) {
  return evolve<SplitStep1D>(initial, potential, dt, horizon, record_every);
}

std::vector<Wavefunction2D> schrodinger_evolve(const Wavefunction2D& initial,
                                               std::span<const double> potential, double dt,
                                               double horizon, std::size_t record_every) {
  return evolve<SplitStep2D>(initial, potential, dt, horizon, record_every);
}

}  // namespace stochmech::quantum
