#include "stochmech/quantum/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochmech/errors.hpp"

namespace stochmech::quantum {

std::vector<double> Grid1D::points() const {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = x(i);
  return p;
}

Grid1D Grid1D::centered(double half_width, std::size_t n) {
  if (!(half_width > 0.0) || n < 2) throw InvalidArgument("grid: half_width > 0 and n >= 2 required");
  const double dx = 2.0 * half_width / static_cast<double>(n);
  return Grid1D{-half_width, dx, n};
}

void Grid1D::validate() const {
  if (n < 2 || !(dx > 0.0) || !std::isfinite(x0)) throw InvalidArgument("grid: need n >= 2, dx > 0");
}

double trapezoid(std::span<const double> f, double h) {
  if (f.empty()) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

double ScalarField::integral() const {
  std::vector<double> f(values.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = valid(i) ? values[i] : 0.0;
  return trapezoid(f, grid.dx);
}

double ScalarField::at(double x) const {
  const double u = (x - grid.x0) / grid.dx;
  if (!(u > 0.0)) return values.front();
  const auto last = static_cast<double>(grid.n - 1);
  if (u >= last) return values.back();
  const auto i = static_cast<std::size_t>(u);
  const double w = u - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

std::vector<Segment> valid_segments(std::span<const std::uint8_t> mask) {
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < mask.size()) {
    while (i < mask.size() && !mask[i]) ++i;
    if (i == mask.size()) break;
    const std::size_t b = i;
    while (i < mask.size() && mask[i]) ++i;
    out.push_back({b, i});
  }
  return out;
}

namespace {

// Five-point fourth-order first-derivative weights (times 1/12h) for the
// evaluation point at offset j inside the window.
constexpr double kD1[5][5] = {{-25, 48, -36, 16, -3},
                              {-3, -10, 18, -6, 1},
                              {1, -8, 0, 8, -1},
                              {-1, 6, -18, 10, 3},
                              {3, -16, 36, -48, 25}};
// Six-point fourth-order second-derivative weights (times 1/12h^2) at the
// first two window offsets; the right edge uses the mirror image.
constexpr double kD2Edge[2][6] = {{45, -154, 214, -156, 61, -10}, {10, -15, -4, 14, -6, 1}};

double first_derivative(std::span<const double> f, std::size_t i, std::size_t b, std::size_t e,
                        double h) {
  const std::size_t len = e - b;
  if (len >= 5) {
    const std::size_t w = std::clamp(i < b + 2 ? b : i - 2, b, e - 5);
    const auto& c = kD1[i - w];
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += c[k] * f[w + k];
    return s / (12.0 * h);
  }
  if (len >= 3) {
    if (i > b && i + 1 < e) return (f[i + 1] - f[i - 1]) / (2.0 * h);
    if (i == b) return (-3.0 * f[i] + 4.0 * f[i + 1] - f[i + 2]) / (2.0 * h);
    return (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h);
  }
  if (len == 2) return (f[b + 1] - f[b]) / h;
  return std::numeric_limits<double>::quiet_NaN();
}

double second_derivative(std::span<const double> f, std::size_t i, std::size_t b, std::size_t e,
                         double h) {
  const std::size_t len = e - b;
  const double h2 = h * h;
  if (len >= 6) {
    if (i >= b + 2 && i + 2 < e)
      return (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h2);
    double s = 0.0;
    if (i < b + 2) {
      for (std::size_t k = 0; k < 6; ++k) s += kD2Edge[i - b][k] * f[b + k];
    } else {
      for (std::size_t k = 0; k < 6; ++k) s += kD2Edge[e - 1 - i][k] * f[e - 1 - k];
    }
    return s / (12.0 * h2);
  }
  if (len >= 3) {
    const std::size_t c = i == b ? b + 1 : (i + 1 == e ? e - 2 : i);
    return (f[c - 1] - 2.0 * f[c] + f[c + 1]) / h2;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<double> derivative(std::span<const double> f, std::span<const std::uint8_t> mask,
                               double h, int order) {
  if (order != 1 && order != 2) throw InvalidArgument("derivative: order must be 1 or 2");
  std::vector<std::uint8_t> all;
  if (mask.empty()) {
    all.assign(f.size(), 1);
    mask = all;
  }
  if (mask.size() != f.size()) throw InvalidArgument("derivative: mask size mismatch");
  std::vector<double> out(f.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& s : valid_segments(mask)) {
    for (std::size_t i = s.begin; i < s.end; ++i)
      out[i] = order == 1 ? first_derivative(f, i, s.begin, s.end, h)
                          : second_derivative(f, i, s.begin, s.end, h);
  }
  return out;
}

}  // namespace stochmech::quantum
