#pragma once

#include <span>

#include "stochmech/quantum/grid.hpp"

namespace stochmech::estimators {

inline constexpr std::size_t kMinDensitySamples = 1000;

/// 0.9 * min(sd, IQR/1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density on the grid, renormalized to unit trapezoid mass.
/// Non-finite samples are ignored; needs at least kMinDensitySamples finite ones.
quantum::ScalarField estimate_density(std::span<const double> samples, const quantum::Grid1D& grid,
                                      double bandwidth);

/// d/dx log of the (unnormalized) kernel estimate at the given points.
std::vector<double> kde_log_gradient(std::span<const double> samples, std::span<const double> at,
                                     double bandwidth);

}  // namespace stochmech::estimators
