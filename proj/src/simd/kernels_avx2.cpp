// Compiled with -mavx2 only (no -mfma) so every mul/add rounds separately,
// matching kernels_scalar.cpp bit for bit.

#include <immintrin.h>

#include "exp_poly.hpp"
#include "normal_poly.hpp"
#include "stochmech/sde/philox.hpp"
#include "kernels_impl.hpp"

namespace stochmech::simd::detail {
namespace {

void euler_update(std::span<double> x, std::span<const double> drift,
                  std::span<const double> noise, double dt, double scale) {
  const std::size_t n = x.size();
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    const __m256d dv = _mm256_loadu_pd(drift.data() + i);
    const __m256d nv = _mm256_loadu_pd(noise.data() + i);
    const __m256d lhs = _mm256_add_pd(xv, _mm256_mul_pd(dv, vdt));
    _mm256_storeu_pd(x.data() + i, _mm256_add_pd(lhs, _mm256_mul_pd(vs, nv)));
  }
  for (; i < n; ++i) x[i] = (x[i] + drift[i] * dt) + scale * noise[i];
}

void linear_recurrence(std::span<double> a, std::span<const double> z, double decay,
                       double scale) {
  const std::size_t n = a.size();
  const __m256d vd = _mm256_set1_pd(decay);
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d av = _mm256_loadu_pd(a.data() + i);
    const __m256d zv = _mm256_loadu_pd(z.data() + i);
    _mm256_storeu_pd(a.data() + i,
                     _mm256_add_pd(_mm256_mul_pd(vd, av), _mm256_mul_pd(vs, zv)));
  }
  for (; i < n; ++i) a[i] = decay * a[i] + scale * z[i];
}

void axpy(std::span<double> out, std::span<const double> x, double slope) {
  const std::size_t n = out.size();
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ov = _mm256_loadu_pd(out.data() + i);
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(ov, _mm256_mul_pd(vs, xv)));
  }
  for (; i < n; ++i) out[i] = out[i] + slope * x[i];
}

void fill(std::span<double> out, double value) {
  const std::size_t n = out.size();
  const __m256d v = _mm256_set1_pd(value);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out.data() + i, v);
  for (; i < n; ++i) out[i] = value;
}

void scale(std::span<double> out, std::span<const double> z, double s) {
  const std::size_t n = out.size();
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(vs, _mm256_loadu_pd(z.data() + i)));
  for (; i < n; ++i) out[i] = s * z[i];
}

// Mirrors exp_nonpositive_scalar for arguments in [-72, 0].
inline __m256d exp_nonpositive_avx2(__m256d x) {
  const __m256d magic = _mm256_set1_pd(kRoundMagic);
  const __m256d t = _mm256_add_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)), magic);
  const __m256d n = _mm256_sub_pd(t, magic);
  const __m256d r = _mm256_sub_pd(_mm256_sub_pd(x, _mm256_mul_pd(n, _mm256_set1_pd(kLn2Hi))),
                                  _mm256_mul_pd(n, _mm256_set1_pd(kLn2Lo)));
  __m256d p = _mm256_set1_pd(kExpCoeffs[0]);
  for (int i = 1; i < 13; ++i)
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpCoeffs[i]));
  const __m256i k = _mm256_sub_epi64(_mm256_castpd_si256(t), _mm256_castpd_si256(magic));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

void gaussian_kernel_sum(std::span<const double> grid, std::span<const double> samples,
                         double inv_bw, std::span<double> acc) {
  const std::size_t n = grid.size();
  const __m256d vinv = _mm256_set1_pd(inv_bw);
  const __m256d half = _mm256_set1_pd(-0.5);
  const __m256d cutoff = _mm256_set1_pd(144.0);
  std::size_t g = 0;
  for (; g + 4 <= n; g += 4) {
    const __m256d xg = _mm256_loadu_pd(grid.data() + g);
    __m256d sum = _mm256_loadu_pd(acc.data() + g);
    for (const double s : samples) {
      const __m256d u = _mm256_mul_pd(_mm256_sub_pd(xg, _mm256_set1_pd(s)), vinv);
      const __m256d u2 = _mm256_mul_pd(u, u);
      const __m256d keep = _mm256_cmp_pd(u2, cutoff, _CMP_LE_OQ);
      if (_mm256_movemask_pd(keep) == 0) {
        sum = _mm256_add_pd(sum, _mm256_setzero_pd());
        continue;
      }
      const __m256d arg = _mm256_blendv_pd(_mm256_setzero_pd(), _mm256_mul_pd(half, u2), keep);
      const __m256d term = _mm256_and_pd(exp_nonpositive_avx2(arg), keep);
      sum = _mm256_add_pd(sum, term);
    }
    _mm256_storeu_pd(acc.data() + g, sum);
  }
  for (; g < n; ++g) {
    double sum = acc[g];
    for (const double s : samples) {
      const double u = (grid[g] - s) * inv_bw;
      const double u2 = u * u;
      sum = sum + (u2 > 144.0 ? 0.0 : exp_nonpositive_scalar(-0.5 * u2));
    }
    acc[g] = sum;
  }
}

// Four streams per register; every 64-bit lane carries one 32-bit word.
inline __m256i lo32(__m256i v) { return _mm256_and_si256(v, _mm256_set1_epi64x(0xFFFFFFFFll)); }

// Exact conversion of lanes holding integers in [0, 2^52).
inline __m256d u52_to_pd(__m256i v) {
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic)), _mm256_set1_pd(0x1.0p52));
}

inline __m256d open_unit_avx2(__m256i hi, __m256i lo) {
  // (hi:lo) >> 11 split into its top 21 and low 32 bits.
  const __m256i top = _mm256_srli_epi64(hi, 11);
  const __m256i low = _mm256_or_si256(
      _mm256_slli_epi64(_mm256_and_si256(hi, _mm256_set1_epi64x(0x7FF)), 21), _mm256_srli_epi64(lo, 11));
  const __m256d v = _mm256_add_pd(_mm256_mul_pd(u52_to_pd(top), _mm256_set1_pd(0x1.0p32)), u52_to_pd(low));
  return _mm256_mul_pd(_mm256_add_pd(v, _mm256_set1_pd(0.5)), _mm256_set1_pd(0x1.0p-53));
}

inline __m256d log_unit_avx2(__m256d u) {
  const __m256i bits = _mm256_castpd_si256(u);
  __m256i e = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(static_cast<long long>(kMantissaMask))),
                      _mm256_set1_epi64x(static_cast<long long>(kExponentOne))));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_sub_epi64(e, _mm256_castpd_si256(big));  // mask lanes are -1
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(kLogCoeffs[0]);
  for (int i = 1; i < 11; ++i) p = _mm256_add_pd(_mm256_mul_pd(p, s2), _mm256_set1_pd(kLogCoeffs[i]));
  // Small signed integer to double: add to the bits of 1.5 * 2^52.
  const __m256d magic = _mm256_set1_pd(kRoundMagic);
  const __m256d ed = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_add_epi64(e, _mm256_castpd_si256(magic))), magic);
  return _mm256_add_pd(_mm256_mul_pd(ed, _mm256_set1_pd(kLn2Hi)),
                       _mm256_add_pd(_mm256_mul_pd(s, p), _mm256_mul_pd(ed, _mm256_set1_pd(kLn2Lo))));
}

inline void sincos_turn_avx2(__m256d u, __m256d& sn, __m256d& cs) {
  const __m256d kd = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(u, _mm256_set1_pd(4.0)), _mm256_set1_pd(0.5)));
  const __m256d a = _mm256_mul_pd(_mm256_sub_pd(u, _mm256_mul_pd(kd, _mm256_set1_pd(0.25))), _mm256_set1_pd(kTwoPi));
  const __m256d z = _mm256_mul_pd(a, a);
  __m256d ps = _mm256_set1_pd(kSinCoeffs[0]);
  for (int i = 1; i < 8; ++i) ps = _mm256_add_pd(_mm256_mul_pd(ps, z), _mm256_set1_pd(kSinCoeffs[i]));
  __m256d pc = _mm256_set1_pd(kCosCoeffs[0]);
  for (int i = 1; i < 9; ++i) pc = _mm256_add_pd(_mm256_mul_pd(pc, z), _mm256_set1_pd(kCosCoeffs[i]));
  const __m256d s = _mm256_add_pd(a, _mm256_mul_pd(a, _mm256_mul_pd(z, ps)));
  const __m256d c = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(z, pc));
  const __m256d magic = _mm256_set1_pd(kRoundMagic);
  const __m256i k = _mm256_and_si256(
      _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(kd, magic)), _mm256_castpd_si256(magic)),
      _mm256_set1_epi64x(3));
  const __m256d swap = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(k, _mm256_set1_epi64x(1)), _mm256_set1_epi64x(1)));
  const __m256i bit1 = _mm256_cmpeq_epi64(_mm256_and_si256(k, _mm256_set1_epi64x(2)), _mm256_set1_epi64x(2));
  const __m256i bit0 = _mm256_castpd_si256(swap);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d neg_s = _mm256_and_pd(_mm256_castsi256_pd(bit1), sign);
  const __m256d neg_c = _mm256_and_pd(_mm256_castsi256_pd(_mm256_xor_si256(bit0, bit1)), sign);
  sn = _mm256_xor_pd(_mm256_blendv_pd(s, c, swap), neg_s);
  cs = _mm256_xor_pd(_mm256_blendv_pd(c, s, swap), neg_c);
}

void philox_normals(std::uint64_t seed, std::uint64_t first_stream, std::uint32_t channel,
                    std::uint64_t counter, std::span<double> z_cos, std::span<double> z_sin) {
  const std::size_t n = z_cos.size();
  const auto w0 = static_cast<std::uint32_t>(counter);
  const auto w1 = (static_cast<std::uint32_t>(counter >> 32) << 16) | (channel & 0xFFFFu);
  const auto key0 = static_cast<std::uint32_t>(seed);
  const auto key1 = static_cast<std::uint32_t>(seed >> 32);
  const __m256i m0 = _mm256_set1_epi64x(sde::Philox4x32::kMul0);
  const __m256i m1 = _mm256_set1_epi64x(sde::Philox4x32::kMul1);
  const __m256i lane = _mm256_set_epi64x(3, 2, 1, 0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i s = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(first_stream + i)), lane);
    __m256i c0 = _mm256_set1_epi64x(w0), c1 = _mm256_set1_epi64x(w1);
    __m256i c2 = lo32(s), c3 = _mm256_srli_epi64(s, 32);
    std::uint32_t k0 = key0, k1 = key1;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += sde::Philox4x32::kWeyl0;
        k1 += sde::Philox4x32::kWeyl1;
      }
      const __m256i p0 = _mm256_mul_epu32(m0, c0);
      const __m256i p1 = _mm256_mul_epu32(m1, c2);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), c1), _mm256_set1_epi64x(k0));
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), c3), _mm256_set1_epi64x(k1));
      c1 = lo32(p1);
      c3 = lo32(p0);
      c0 = n0;
      c2 = n2;
    }
    const __m256d u1 = open_unit_avx2(c0, c1);
    const __m256d u2 = open_unit_avx2(c2, c3);
    const __m256d r = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_unit_avx2(u1)));
    __m256d sn, cs;
    sincos_turn_avx2(u2, sn, cs);
    _mm256_storeu_pd(z_cos.data() + i, _mm256_mul_pd(r, cs));
    _mm256_storeu_pd(z_sin.data() + i, _mm256_mul_pd(r, sn));
  }
  const sde::Philox4x32::Key key{key0, key1};
  for (; i < n; ++i) {
    const std::uint64_t s = first_stream + i;
    const auto b = sde::Philox4x32::block(
        {w0, w1, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)}, key);
    box_muller_scalar(b[0], b[1], b[2], b[3], z_cos[i], z_sin[i]);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{euler_update, linear_recurrence, axpy, fill, scale,
                                 gaussian_kernel_sum, philox_normals};
  return table;
}

}  // namespace stochmech::simd::detail
