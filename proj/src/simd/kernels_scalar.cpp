#include "kernels_impl.hpp"

#include "exp_poly.hpp"
#include "normal_poly.hpp"
#include "stochmech/sde/philox.hpp"

namespace stochmech::simd::detail {
namespace {

void euler_update(std::span<double> x, std::span<const double> drift,
                  std::span<const double> noise, double dt, double scale) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] + drift[i] * dt) + scale * noise[i];
}

void linear_recurrence(std::span<double> a, std::span<const double> z, double decay,
                       double scale) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = decay * a[i] + scale * z[i];
}

void axpy(std::span<double> out, std::span<const double> x, double slope) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + slope * x[i];
}

void fill(std::span<double> out, double value) {
  for (double& o : out) o = value;
}

void scale(std::span<double> out, std::span<const double> z, double s) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * z[i];
}

void gaussian_kernel_sum(std::span<const double> grid, std::span<const double> samples,
                         double inv_bw, std::span<double> acc) {
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = acc[g];
    const double xg = grid[g];
    for (const double s : samples) {
      const double u = (xg - s) * inv_bw;
      const double u2 = u * u;
      const double term = u2 > 144.0 ? 0.0 : exp_nonpositive_scalar(-0.5 * u2);
      sum = sum + term;
    }
    acc[g] = sum;
  }
}

void philox_normals(std::uint64_t seed, std::uint64_t first_stream, std::uint32_t channel,
                    std::uint64_t counter, std::span<double> z_cos, std::span<double> z_sin) {
  const sde::Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
  const auto w0 = static_cast<std::uint32_t>(counter);
  const auto w1 = (static_cast<std::uint32_t>(counter >> 32) << 16) | (channel & 0xFFFFu);
  for (std::size_t i = 0; i < z_cos.size(); ++i) {
    const std::uint64_t s = first_stream + i;
    const auto b = sde::Philox4x32::block(
        {w0, w1, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)}, key);
    box_muller_scalar(b[0], b[1], b[2], b[3], z_cos[i], z_sin[i]);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{euler_update, linear_recurrence, axpy, fill, scale,
                                 gaussian_kernel_sum, philox_normals};
  return table;
}

}  // namespace stochmech::simd::detail
