#include "stochmech/field/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "stochmech/errors.hpp"
#include "stochmech/quantum/split_step.hpp"
#include "stochmech/sde/noise_stream.hpp"

namespace stochmech::field {

double gravitational_spectrum(double k, double t, double eps, double xi, double G) {
  if (k == 0.0 || !std::isfinite(k)) throw InvalidArgument("gravitational_spectrum: k must be nonzero");
  if (!(t >= 0.0)) throw InvalidArgument("gravitational_spectrum: t must be non-negative");
  if (xi == 0.0) throw InvalidArgument("gravitational_spectrum: xi must be nonzero");
  if (!(G > 0.0)) throw InvalidArgument("gravitational_spectrum: G must be positive");
  const double k2 = k * k;
  const double fg = 4.0 * std::numbers::pi * G;
  return k2 * k2 / (fg * fg) * (eps * eps) / (xi * xi) * t;
}

double potential_spectrum(double p_matter, double k, double G) {
  if (k == 0.0 || !std::isfinite(k)) throw InvalidArgument("potential_spectrum: zero mode of the Poisson equation");
  if (!(G > 0.0)) throw InvalidArgument("potential_spectrum: G must be positive");
  const double k2 = k * k;
  const double fg = 4.0 * std::numbers::pi * G;
  return fg * fg / (k2 * k2) * p_matter;
}

PoissonCheck spectral_poisson_check(const std::function<double(double)>& p_matter, double G,
                                    std::size_t n, double box, std::size_t realizations,
                                    std::size_t bands, std::uint64_t seed) {
  if (n < 8 || n % 2) throw InvalidArgument("spectral_poisson_check: need an even grid of at least 8 points");
  if (!(box > 0.0) || realizations == 0 || bands == 0 || bands > n / 2 - 1)
    throw InvalidArgument("spectral_poisson_check: bad box, realization or band count");
  if (!(G > 0.0)) throw InvalidArgument("spectral_poisson_check: G must be positive");
  using cplx = std::complex<double>;
  const std::size_t half = n / 2;
  const double dn = static_cast<double>(n);
  const double fg = 4.0 * std::numbers::pi * G;

  std::vector<cplx> buf(n);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(quantum::fftw_planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  // Modes j = 1 .. half-1 (zero and Nyquist excluded). Estimator of the
  // spectrum from the unnormalized DFT: P_hat = (box / n^2) |f_j|^2.
  std::vector<double> power(half, 0.0);
  for (std::size_t r = 0; r < realizations; ++r) {
    sde::NoiseStream noise(seed, r, 0);
    std::fill(buf.begin(), buf.end(), cplx{});
    for (std::size_t j = 1; j < half; ++j) {
      const double k = 2.0 * std::numbers::pi * static_cast<double>(j) / box;
      const double amp = std::sqrt(p_matter(k) * dn * dn / box / 2.0);
      const cplx d{amp * noise.normal(), amp * noise.normal()};
      // Poisson: -k^2 theta = 4 pi G delta.
      const cplx th = -fg * d / (k * k);
      buf[j] = th;
      buf[n - j] = std::conj(th);
    }
    fftw_execute(bwd);  // real-space potential (imaginary part is round-off)
    for (auto& c : buf) c = cplx{c.real() / dn, 0.0};
    fftw_execute(fwd);
    for (std::size_t j = 1; j < half; ++j) power[j] += box / (dn * dn) * std::norm(buf[j]);
  }
  {
    std::lock_guard lock(quantum::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }

  PoissonCheck out;
  const std::size_t modes = half - 1;
  for (std::size_t b = 0; b < bands; ++b) {
    const std::size_t lo = 1 + b * modes / bands, hi = 1 + (b + 1) * modes / bands;
    double ks = 0.0, m = 0.0, e = 0.0, q = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double k = 2.0 * std::numbers::pi * static_cast<double>(j) / box;
      const double pj = power[j] / static_cast<double>(realizations);
      const double ej = potential_spectrum(p_matter(k), k, G);
      ks += k;
      m += pj;
      e += ej;
      q += pj / ej;
    }
    const double cnt = static_cast<double>(hi - lo);
    out.k_band.push_back(ks / cnt);
    out.measured.push_back(m / cnt);
    out.expected.push_back(e / cnt);
    out.ratio.push_back(q / cnt);
    out.rel_stderr.push_back(1.0 / std::sqrt(cnt * static_cast<double>(realizations)));
    out.max_rel_error = std::max(out.max_rel_error, std::abs(q / cnt - 1.0));
  }
  return out;
}

}  // namespace stochmech::field
