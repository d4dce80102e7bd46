#include "stochmech/sde/noise_stream.hpp"

#include <cmath>
#include <numbers>

#include "stochmech/simd/kernels.hpp"

namespace stochmech::sde {
namespace {

double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t channel)
    : seed_(seed), stream_id_(stream_id), channel_(channel) {}

Philox4x32::Counter NoiseStream::next_block() {
  // word1 packs the upper 16 counter bits with the 16-bit channel.
  const Philox4x32::Counter ctr{
      static_cast<std::uint32_t>(counter_),
      (static_cast<std::uint32_t>(counter_ >> 32) << 16) | (channel_ & 0xFFFFu),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return Philox4x32::block(ctr, key);
}

double NoiseStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const auto b = next_block();
  double z;
  simd::normal_pair(b[0], b[1], b[2], b[3], z, cached_);
  has_cached_ = true;
  return z;
}

void NoiseStream::normals(std::span<double> out) {
  for (double& z : out) z = normal();
}

double NoiseStream::uniform() {
  const auto b = next_block();
  return to_open_unit(b[0], b[1]);
}

}  // namespace stochmech::sde
