#include "stochmech/harness/distance.hpp"

#include <cmath>
#include <string>

#include "stochmech/errors.hpp"
#include "stochmech/estimators/density.hpp"

namespace stochmech::harness {

Metric parse_metric(std::string_view name) {
  if (name == "l1" || name == "L1") return Metric::l1;
  if (name == "w1" || name == "W1") return Metric::w1;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

namespace {

bool same_grid(const quantum::Grid1D& a, const quantum::Grid1D& b) {
  return a.n == b.n && std::abs(a.x0 - b.x0) <= 1e-12 * (1.0 + std::abs(a.x0)) &&
         std::abs(a.dx - b.dx) <= 1e-12 * a.dx;
}

void check_mass(const quantum::ScalarField& f, const char* which) {
  const double m = f.integral();
  if (!(std::abs(m - 1.0) <= kMassTolerance))
    throw InvalidArgument(std::string("marginal_distance: density ") + which + " has mass " +
                          std::to_string(m));
}

}  // namespace

double marginal_distance(const quantum::ScalarField& a, const quantum::ScalarField& b, Metric m) {
  if (!same_grid(a.grid, b.grid) || a.values.size() != a.grid.n || b.values.size() != b.grid.n)
    throw InvalidArgument("marginal_distance: densities must share one grid");
  if (a.grid.n < 2) throw InvalidArgument("marginal_distance: grid needs at least 2 points");
  check_mass(a, "a");
  check_mass(b, "b");
  const std::size_t n = a.grid.n;
  const double h = a.grid.dx;
  std::vector<double> d(n);
  if (m == Metric::l1) {
    for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(a.values[i] - b.values[i]);
    return quantum::trapezoid(d, h);
  }
  // Cumulative trapezoid of the difference gives F_a - F_b directly.
  double F = 0.0;
  d[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    F += 0.5 * h * ((a.values[i - 1] - b.values[i - 1]) + (a.values[i] - b.values[i]));
    d[i] = std::abs(F);
  }
  return quantum::trapezoid(d, h);
}

EmpiricalMarginal empirical_marginal(std::span<const double> samples, const quantum::Grid1D& grid,
                                     std::size_t groups, double bandwidth) {
  if (groups < 2) throw InvalidArgument("empirical_marginal: need at least 2 groups");
  std::vector<std::vector<double>> parts(groups);
  std::vector<double> finite;
  finite.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) continue;
    parts[i % groups].push_back(samples[i]);
    finite.push_back(samples[i]);
  }
  EmpiricalMarginal out;
  out.bandwidth = bandwidth > 0.0 ? bandwidth : estimators::silverman_bandwidth(finite);
  // Per-group estimates share one bandwidth, so mixtures of them are the
  // leave-one-out estimates.
  std::vector<quantum::ScalarField> per;
  per.reserve(groups);
  for (const auto& p : parts) per.push_back(estimators::estimate_density(p, grid, out.bandwidth));
  auto mix = [&](std::size_t skip) {
    quantum::ScalarField f{grid, std::vector<double>(grid.n, 0.0), {}};
    double w_sum = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      if (g == skip) continue;
      const double w = static_cast<double>(parts[g].size());
      w_sum += w;
      for (std::size_t i = 0; i < grid.n; ++i) f.values[i] += w * per[g].values[i];
    }
    for (double& v : f.values) v /= w_sum;
    return f;
  };
  out.density = mix(groups);
  out.replicates.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) out.replicates.push_back(mix(g));
  return out;
}

double jackknife_stderr(std::span<const double> rep) {
  const auto G = static_cast<double>(rep.size());
  if (rep.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double r : rep) mean += r;
  mean /= G;
  double s = 0.0;
  for (double r : rep) s += (r - mean) * (r - mean);
  return std::sqrt((G - 1.0) / G * s);
}

DistanceEstimate marginal_distance(const EmpiricalMarginal& emp, const quantum::ScalarField& ref,
                                   Metric m) {
  DistanceEstimate d;
  d.value = marginal_distance(emp.density, ref, m);
  std::vector<double> rep;
  rep.reserve(emp.replicates.size());
  for (const auto& r : emp.replicates) rep.push_back(marginal_distance(r, ref, m));
  d.stderr_ = jackknife_stderr(rep);
  return d;
}

}  // namespace stochmech::harness
