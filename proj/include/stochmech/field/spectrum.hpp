#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace stochmech::field {

/// P(k, t) = |k|^4 / (4 pi G)^2 * eps^2 / xi^2 * t.
double gravitational_spectrum(double k, double t, double eps, double xi, double G);

/// P_theta = (4 pi G)^2 / |k|^4 * P_matter.
double potential_spectrum(double p_matter, double k, double G);

/// Brute-force transfer check on a periodic 1-D grid: draw Gaussian density
/// fields with spectrum P, solve the Poisson equation spectrally, go back to
/// real space, and measure the potential's spectrum. Results are averaged
/// over realizations and over k-bands of equal mode count.
struct PoissonCheck {
  std::vector<double> k_band;      ///< mean wavenumber of each band
  std::vector<double> measured;    ///< band-averaged measured P_theta
  std::vector<double> expected;    ///< band-averaged (4 pi G)^2 / k^4 P
  std::vector<double> ratio;       ///< band mean of measured/expected per mode
  std::vector<double> rel_stderr;  ///< 1/sqrt(modes in band x realizations)
  double max_rel_error = 0.0;      ///< max over bands of |ratio - 1|
};

PoissonCheck spectral_poisson_check(const std::function<double(double)>& p_matter, double G,
                                    std::size_t n_points, double box_length,
                                    std::size_t realizations, std::size_t bands,
                                    std::uint64_t seed);

}  // namespace stochmech::field
