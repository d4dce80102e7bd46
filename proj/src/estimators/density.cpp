#include "stochmech/estimators/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochmech/errors.hpp"
#include "stochmech/estimators/binning.hpp"
#include "stochmech/simd/kernels.hpp"

namespace stochmech::estimators {
namespace {

std::vector<double> finite_only(std::span<const double> samples) {
  std::vector<double> s;
  s.reserve(samples.size());
  for (double v : samples)
    if (std::isfinite(v)) s.push_back(v);
  return s;
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  const auto s = finite_only(samples);
  if (s.size() < 2) throw InvalidArgument("silverman_bandwidth: need at least two samples");
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(s.size() - 1));
  const double qs[] = {0.25, 0.75};
  const auto q = quantiles(s, qs);
  double spread = std::min(sd, (q[1] - q[0]) / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) throw InvalidArgument("silverman_bandwidth: zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

quantum::ScalarField estimate_density(std::span<const double> samples, const quantum::Grid1D& grid,
                                      double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InvalidArgument("estimate_density: bandwidth must be positive");
  grid.validate();
  const auto s = finite_only(samples);
  if (s.size() < kMinDensitySamples)
    throw InvalidArgument("estimate_density: needs at least 1000 finite samples");
  const auto pts = grid.points();
  std::vector<double> acc(grid.n, 0.0);
  simd::kernels().gaussian_kernel_sum(pts, s, 1.0 / bandwidth, acc);
  quantum::ScalarField out{grid, std::move(acc), {}};
  const double mass = out.integral();
  if (!(mass > 0.0)) throw InvalidArgument("estimate_density: samples do not overlap the grid");
  for (double& v : out.values) v /= mass;
  return out;
}

std::vector<double> kde_log_gradient(std::span<const double> samples, std::span<const double> at,
                                     double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("kde_log_gradient: bandwidth must be positive");
  const auto s = finite_only(samples);
  std::vector<double> out(at.size());
  const double inv = 1.0 / bandwidth;
  for (std::size_t g = 0; g < at.size(); ++g) {
    double w = 0.0, dw = 0.0;
    for (double v : s) {
      const double u = (at[g] - v) * inv;
      if (std::abs(u) > 12.0) continue;
      const double k = std::exp(-0.5 * u * u);
      w += k;
      dw -= u * inv * k;
    }
    out[g] = w > 0.0 ? dw / w : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace stochmech::estimators
