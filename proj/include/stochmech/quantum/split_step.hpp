#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "stochmech/quantum/wavefunction.hpp"

namespace stochmech::quantum {

/// Strang split-step Fourier propagator on the periodic box of the grid:
/// half potential kick, exact kinetic step in k-space, half potential kick.
class SplitStep1D {
 public:
  SplitStep1D(WavefunctionState initial, std::vector<double> potential, double dt);
  ~SplitStep1D();
  SplitStep1D(const SplitStep1D&) = delete;
  SplitStep1D& operator=(const SplitStep1D&) = delete;

  void step(std::size_t n = 1);
  const WavefunctionState& state() const { return state_; }
  double dt() const { return dt_; }

 private:
  struct Plans;
  WavefunctionState state_;
  double dt_;
  std::vector<cplx> half_kick_;
  std::vector<cplx> kinetic_;
  std::unique_ptr<Plans> plans_;
};

class SplitStep2D {
 public:
  SplitStep2D(Wavefunction2D initial, std::vector<double> potential, double dt);
  ~SplitStep2D();
  SplitStep2D(const SplitStep2D&) = delete;
  SplitStep2D& operator=(const SplitStep2D&) = delete;

  void step(std::size_t n = 1);
  const Wavefunction2D& state() const { return state_; }
  double dt() const { return dt_; }

 private:
  struct Plans;
  Wavefunction2D state_;
  double dt_;
  std::vector<cplx> half_kick_;
  std::vector<cplx> kinetic_;
  std::unique_ptr<Plans> plans_;
};

/// FFTW planning is not thread-safe (execution on distinct arrays is);
/// every planner call in the library holds this lock.
std::mutex& fftw_planner_mutex();

/// Angular wavenumbers of the periodic box in FFT order.
std::vector<double> fft_wavenumbers(std::size_t n, double length);

/// Evolve over [t, t + horizon] and return the states at every
/// `record_every` steps (initial and final always included). Throws
/// StepSizeError when the norm drifts by more than 1e-6 per unit time.
std::vector<WavefunctionState> schrodinger_evolve(const WavefunctionState& initial,
                                                  std::span<const double> potential, double dt,
                                                  double horizon, std::size_t record_every = 0);
std::vector<Wavefunction2D> schrodinger_evolve(const Wavefunction2D& initial,
                                               std::span<const double> potential, double dt,
                                               double horizon, std::size_t record_every = 0);

inline constexpr double kMaxNormDriftRate = 1e-6;

}  // namespace stochmech::quantum
