#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "stochmech/sde/integrator.hpp"

namespace stochmech::sde {

/// Vector field over particle coordinates, evaluated for a batch of
/// trajectories at once: out[p][i] = f_p(x[0][i], ..., x[P-1][i], t).
/// Implementations must be elementwise in i (no cross-trajectory coupling)
/// so that results do not depend on how the ensemble is blocked.
class PositionField {
 public:
  virtual ~PositionField() = default;
  virtual std::size_t particles() const = 0;
  virtual void evaluate(double t, std::span<const double* const> x,
                        std::span<double* const> out, std::size_t n) const = 0;
};

/// Draws the initial state of one trajectory from its own streams.
class InitialSampler {
 public:
  virtual ~InitialSampler() = default;
  virtual std::size_t particles() const = 0;
  virtual bool provides_velocity() const { return false; }
  /// Writes x[p] for every particle, and v[p] when provides_velocity().
  virtual void sample(std::uint64_t seed, std::uint64_t traj_id, std::span<double> x,
                      std::span<double> v) const = 0;
};

/// Every trajectory starts at the same point (and velocity).
class FixedStart final : public InitialSampler {
 public:
  explicit FixedStart(std::vector<double> x, std::vector<double> v = {});
  std::size_t particles() const override { return x_.size(); }
  bool provides_velocity() const override { return !v_.empty(); }
  void sample(std::uint64_t, std::uint64_t, std::span<double> x,
              std::span<double> v) const override;

 private:
  std::vector<double> x_;
  std::vector<double> v_;
};

enum class Dynamics {
  overdamped,   ///< dx = b(x,t) dt + noise
  phase_space,  ///< dx = v dt + noise, dv = a(x,t) dt
};

enum class Driving {
  white,    ///< noise term ε dW
  colored,  ///< noise term ε A dt with dA = −βA dt + β dW
};

/// Complete per-trajectory process description consumed by run_ensemble.
struct ProcessModel {
  Dynamics dynamics = Dynamics::overdamped;
  Driving driving = Driving::white;
  std::vector<double> eps;   ///< per particle
  std::vector<double> beta;  ///< per particle, colored driving only
  std::shared_ptr<const PositionField> field;  ///< drift b or acceleration a
  std::shared_ptr<const InitialSampler> init;
  /// Dynamics noise channel per particle; empty means channel::dynamics(p).
  std::vector<std::uint32_t> noise_channels;
  /// A(0) ~ N(0, β/2) independent of (x, v); otherwise A(0) = 0.
  bool stationary_colored_start = true;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  std::size_t particles() const { return eps.size(); }
  void validate(const IntegratorConfig& cfg) const;
};

/// Step indices (0 = initial state) at which the ensemble is stored.
struct RecordPlan {
  std::vector<std::size_t> steps;

  static RecordPlan every(std::size_t n_steps, std::size_t stride);
  /// Nearest step for each requested time; duplicates removed, sorted.
  static RecordPlan at_times(const IntegratorConfig& cfg, std::span<const double> times);
};

struct RunOptions {
  std::size_t threads = 0;  ///< 0: STOCHMECH_THREADS or hardware concurrency
  std::size_t block = 512;  ///< trajectories per work item
};

/// Recorded ensemble. Storage is [record][particle][trajectory].
struct TrajectoryEnsemble {
  std::size_t n_traj = 0;
  std::size_t n_particles = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> v;  ///< empty unless phase-space dynamics
  std::vector<double> a;  ///< empty unless colored driving
  std::vector<std::uint8_t> valid;
  std::size_t invalid_count = 0;
  std::size_t first_invalid = std::numeric_limits<std::size_t>::max();

  bool has_velocity() const { return !v.empty(); }
  bool has_noise() const { return !a.empty(); }
  std::size_t records() const { return times.size(); }

  /// Index of the record at time t (tolerance 1e-9 relative to the spacing);
  /// throws InvalidArgument when t was not recorded.
  std::size_t time_index(double t) const;

  std::span<const double> positions(std::size_t rec, std::size_t particle = 0) const;
  std::span<const double> velocities(std::size_t rec, std::size_t particle = 0) const;
  std::span<const double> noise(std::size_t rec, std::size_t particle = 0) const;

  /// Positions of valid trajectories only.
  std::vector<double> valid_positions(std::size_t rec, std::size_t particle = 0) const;
};

/// Runs n_traj trajectories; trajectory i draws all randomness from streams
/// with stream_id = i, so the result is bit-identical for any thread count.
/// Trajectories that leave [lower, upper] or go non-finite are flagged
/// invalid (their later records are NaN); the caller decides the policy.
TrajectoryEnsemble run_ensemble(const ProcessModel& model, std::size_t n_traj,
                                 std::uint64_t seed, const IntegratorConfig& cfg,
                                 const RecordPlan& plan, const RunOptions& options = {});

/// Affine field out_p = Σ_q K_pq(t) x_q + c_p(t), evaluated with the SIMD
/// kernels. K and c are given as callables of time.
class LinearField final : public PositionField {
 public:
  using MatrixFn = std::function<std::vector<double>(double)>;  // row-major P×P
  using OffsetFn = std::function<std::vector<double>(double)>;  // length P, may be empty

  LinearField(std::size_t particles, MatrixFn matrix, OffsetFn offset = {});
  static std::shared_ptr<LinearField> constant(std::vector<double> matrix,
                                               std::vector<double> offset = {});

  std::size_t particles() const override { return particles_; }
  void evaluate(double t, std::span<const double* const> x, std::span<double* const> out,
                std::size_t n) const override;

 private:
  std::size_t particles_;
  MatrixFn matrix_;
  OffsetFn offset_;
};

/// Per-point callable field (scalar path).
class CallableField final : public PositionField {
 public:
  using Fn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
  CallableField(std::size_t particles, Fn fn);
  /// One-particle convenience: f(x, t).
  static std::shared_ptr<CallableField> scalar(std::function<double(double, double)> f);

  std::size_t particles() const override { return particles_; }
  void evaluate(double t, std::span<const double* const> x, std::span<double* const> out,
                std::size_t n) const override;

 private:
  std::size_t particles_;
  Fn fn_;
};

}  // namespace stochmech::sde
