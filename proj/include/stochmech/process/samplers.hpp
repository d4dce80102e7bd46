#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stochmech/quantum/catalog.hpp"
#include "stochmech/sde/ensemble.hpp"

namespace stochmech::process {

/// Channel used for velocity draws of particle p (positions use
/// sde::channel::initial_state(p)).
inline constexpr std::uint32_t velocity_channel(std::uint32_t p) { return 0x4200u + p; }

/// x ~ N(mean, cov) through the Cholesky factor.
class GaussianSampler final : public sde::InitialSampler {
 public:
  GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);
  static std::shared_ptr<GaussianSampler> scalar(double mean, double variance);

  std::size_t particles() const override { return static_cast<std::size_t>(mean_.size()); }
  void sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
              std::span<double> v) const override;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;
};

/// One particle from a tabulated density by inverse CDF (piecewise linear
/// density, so the CDF is piecewise quadratic and inverted exactly per cell).
class GridDensitySampler final : public sde::InitialSampler {
 public:
  GridDensitySampler(std::vector<double> x, std::vector<double> density);

  std::size_t particles() const override { return 1; }
  void sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
              std::span<double> v) const override;
  double quantile(double u) const;

 private:
  std::vector<double> x_;
  std::vector<double> f_;
  std::vector<double> cdf_;
};

/// Exact Gaussian sampler for Gaussian catalog states, tabulated inverse CDF
/// otherwise.
std::shared_ptr<sde::InitialSampler> density_sampler(const quantum::AnalyticState1D& state,
                                                     double t);

enum class VelocityFamily { gaussian_about_b, two_point_about_b };

struct VelocityInitProfile {
  VelocityFamily family = VelocityFamily::gaussian_about_b;
  double spread = 0.0;  ///< s >= 0; s = 0 gives v = b0(x)
  bool operator==(const VelocityInitProfile&) const = default;
};

VelocityFamily parse_velocity_family(std::string_view name);
std::string_view velocity_family_name(VelocityFamily f);

/// b0 at the initial positions of all particles: out[p] = b0_p(x).
using InitialDrift = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Joint (x, v) sampler: x from `positions`, then v_p = b0_p(x) + s * xi_p
/// with xi standard normal (gaussian_about_b) or +-1 with equal probability
/// (two_point_about_b).
class PhaseSpaceSampler final : public sde::InitialSampler {
 public:
  PhaseSpaceSampler(std::shared_ptr<const sde::InitialSampler> positions, InitialDrift b0,
                    VelocityInitProfile profile);

  std::size_t particles() const override { return positions_->particles(); }
  bool provides_velocity() const override { return true; }
  void sample(std::uint64_t seed, std::uint64_t id, std::span<double> x,
              std::span<double> v) const override;

 private:
  std::shared_ptr<const sde::InitialSampler> positions_;
  InitialDrift b0_;
  VelocityInitProfile profile_;
};

std::shared_ptr<PhaseSpaceSampler> construct_initial_phase_density(
    std::shared_ptr<const sde::InitialSampler> rho0, InitialDrift b0, VelocityInitProfile profile);

}  // namespace stochmech::process
