#include "stochmech/estimators/binning.hpp"

#include <algorithm>
#include <cmath>

#include "stochmech/errors.hpp"

namespace stochmech::estimators {

std::vector<double> Bins::centers() const {
  std::vector<double> c(count);
  for (std::size_t j = 0; j < count; ++j) c[j] = center(j);
  return c;
}

std::vector<double> Bins::edges() const {
  std::vector<double> e(count + 1);
  for (std::size_t j = 0; j <= count; ++j) e[j] = lo + width * static_cast<double>(j);
  return e;
}

std::size_t Bins::locate(double x) const {
  if (!std::isfinite(x) || count == 0) return npos;
  const double u = (x - lo) / width;
  if (!(u >= 0.0)) return npos;
  const auto j = static_cast<std::size_t>(u);
  return j < count ? j : npos;
}

Bins Bins::uniform(double lo, double hi, std::size_t count) {
  if (!(hi > lo) || count == 0 || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("Bins::uniform: need lo < hi and count > 0");
  return Bins{lo, (hi - lo) / static_cast<double>(count), count};
}

std::vector<double> quantiles(std::span<const double> samples, std::span<const double> qs) {
  std::vector<double> s;
  s.reserve(samples.size());
  for (double v : samples)
    if (std::isfinite(v)) s.push_back(v);
  if (s.empty()) throw InvalidArgument("quantile: no finite samples");
  std::sort(s.begin(), s.end());
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: probability outside [0, 1]");
    const double h = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(i);
    out.push_back(i + 1 < s.size() ? s[i] + frac * (s[i + 1] - s[i]) : s[i]);
  }
  return out;
}

double quantile(std::span<const double> samples, double q) {
  return quantiles(samples, std::span<const double>(&q, 1))[0];
}

Bins freedman_diaconis(std::span<const double> samples, double q_lo, double q_hi) {
  if (!(q_lo < q_hi)) throw InvalidArgument("freedman_diaconis: q_lo must be below q_hi");
  const double qs[] = {q_lo, 0.25, 0.75, q_hi};
  const auto q = quantiles(samples, qs);
  std::size_t n = 0;
  for (double v : samples) n += std::isfinite(v) ? 1 : 0;
  const double range = q[3] - q[0];
  const double iqr = q[2] - q[1];
  if (!(range > 0.0) || !(iqr > 0.0)) {
    // Degenerate sample: one unit bin around the common value.
    return Bins{q[0] - 0.5, 1.0, 1};
  }
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(n));
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(range / h)));
  return Bins::uniform(q[0], q[3], count);
}

BinnedConditional conditional_mean(std::span<const double> x, std::span<const double> f,
                                   const Bins& bins, std::size_t n_min) {
  if (x.size() != f.size()) throw InvalidArgument("conditional_mean: size mismatch");
  BinnedConditional out;
  out.bins = bins;
  out.n_min = n_min;
  if (bins.count == 0) return out;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < x.size(); ++i) finite += std::isfinite(x[i]) && std::isfinite(f[i]);
  if (finite < n_min) throw InvalidArgument("conditional_mean: fewer samples than n_min");

  const std::size_t B = bins.count;
  out.count.assign(B, 0);
  out.mean.assign(B, 0.0);
  out.variance.assign(B, 0.0);
  out.stderr_.assign(B, 0.0);
  out.reliable.assign(B, 0);
  out.x_mean.assign(B, 0.0);
  // Welford per bin.
  std::vector<double> m2(B, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(f[i])) continue;
    const std::size_t j = bins.locate(x[i]);
    if (j == Bins::npos) continue;
    const double n = static_cast<double>(++out.count[j]);
    const double d = f[i] - out.mean[j];
    out.mean[j] += d / n;
    m2[j] += d * (f[i] - out.mean[j]);
    out.x_mean[j] += (x[i] - out.x_mean[j]) / n;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < B; ++j) {
    const std::size_t c = out.count[j];
    if (c == 0) out.mean[j] = out.x_mean[j] = nan;
    out.variance[j] = c > 1 ? m2[j] / static_cast<double>(c - 1) : nan;
    out.stderr_[j] = c > 1 ? std::sqrt(out.variance[j] / static_cast<double>(c)) : nan;
    out.reliable[j] = c >= n_min && c > 1;
  }
  return out;
}

}  // namespace stochmech::estimators
