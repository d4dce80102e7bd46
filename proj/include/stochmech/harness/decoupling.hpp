#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stochmech/process/samplers.hpp"

namespace stochmech::harness {

/// Two particles with linear forces a = K x, coupled before t = 0 and
/// switched to K_after at t = 0, driven by independent colored noise.
struct DecouplingSpec {
  Eigen::Matrix2d k_before{{-1.25, 0.75}, {0.75, -1.25}};
  Eigen::Matrix2d k_after{{-1.0, 0.0}, {0.0, -1.0}};
  /// Initial position covariance; empty (0x0) means the ground state of k_before.
  Eigen::MatrixXd initial_covariance;
  double hbar = 1.0;
  double mass = 1.0;
  double beta = 100.0;
  process::VelocityInitProfile profile;
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t record_stride = 100;
  std::size_t n_traj = 100000;
  bool swap_noise = false;  ///< give particle 0 the noise stream of particle 1 and vice versa
  std::size_t threads = 0;
};

struct DecouplingReport {
  std::vector<double> times;
  std::vector<double> mean1, mean2;
  std::vector<double> var1, var2;
  std::vector<double> cov12, cov12_stderr;
  std::vector<double> var1_oracle, var2_oracle, cov12_oracle;
  std::size_t escaped = 0;
};

/// Position covariance (hbar / 2m) Omega^-1 of the ground state of a = K x,
/// Omega = sqrt(-K).
Eigen::Matrix2d ground_state_covariance(const Eigen::Matrix2d& k, double hbar, double mass);

/// Covariance of (x1, x2, v1, v2, A1, A2) at time t for the linear system.
Eigen::MatrixXd linear_phase_space_covariance(const DecouplingSpec& spec, double t);

DecouplingReport decoupling_experiment(const DecouplingSpec& spec, std::uint64_t seed);

}  // namespace stochmech::harness
