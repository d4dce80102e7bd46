#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stochmech/quantum/grid.hpp"

namespace stochmech::harness {

enum class Metric { l1, w1 };

Metric parse_metric(std::string_view name);

/// Allowed deviation of an input mass from 1.
inline constexpr double kMassTolerance = 1e-3;

/// L1 or 1-Wasserstein distance between two normalized densities on a
/// common grid (W1 as the integral of |F_a - F_b|).
double marginal_distance(const quantum::ScalarField& a, const quantum::ScalarField& b, Metric m);

/// Kernel estimate of a sample marginal plus leave-one-group-out replicates
/// (trajectory index mod groups), all at the full-sample bandwidth
/// (Silverman when `bandwidth` is 0).
struct EmpiricalMarginal {
  quantum::ScalarField density;
  std::vector<quantum::ScalarField> replicates;
  double bandwidth = 0.0;
};

EmpiricalMarginal empirical_marginal(std::span<const double> samples, const quantum::Grid1D& grid,
                                     std::size_t groups = 20, double bandwidth = 0.0);

struct DistanceEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Distance of an empirical marginal to a reference with jackknife error.
DistanceEstimate marginal_distance(const EmpiricalMarginal& emp, const quantum::ScalarField& ref,
                                   Metric m);

/// Grouped jackknife error from the full value and its replicates.
double jackknife_stderr(std::span<const double> replicates);

}  // namespace stochmech::harness
