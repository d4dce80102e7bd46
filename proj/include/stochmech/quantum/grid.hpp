#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stochmech::quantum {

/// Uniform grid x_i = x0 + i*dx, i in [0, n). Used as a periodic box of
/// length n*dx by the spectral solver.
struct Grid1D {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t n = 0;

  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  double length() const { return dx * static_cast<double>(n); }
  double back() const { return x(n - 1); }
  std::vector<double> points() const;

  /// n points symmetric about the origin covering [-half_width, half_width).
  static Grid1D centered(double half_width, std::size_t n);
  void validate() const;
};

/// Real field on a grid. An empty mask means every point is valid; values at
/// masked-out points are unspecified (NaN by convention).
struct ScalarField {
  Grid1D grid;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  bool valid(std::size_t i) const { return mask.empty() || mask[i] != 0; }
  /// Trapezoid integral over valid points (invalid points count as zero).
  double integral() const;
  /// Linear interpolation; points outside the grid take the edge value.
  double at(double x) const;
};

/// First (order 1) or second (order 2) derivative on the valid mask: fourth
/// order centered stencils in the interior, one-sided near mask edges, lower
/// order on segments too short for the wide stencils. Invalid points get NaN.
std::vector<double> derivative(std::span<const double> f, std::span<const std::uint8_t> mask,
                               double h, int order);

/// Connected runs [begin, end) of valid points.
struct Segment {
  std::size_t begin;
  std::size_t end;
};
std::vector<Segment> valid_segments(std::span<const std::uint8_t> mask);

double trapezoid(std::span<const double> f, double h);

}  // namespace stochmech::quantum
