#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stochmech/sde/philox.hpp"

namespace stochmech::sde {

/// Counter-based Gaussian/uniform source keyed by (seed, stream_id, channel).
/// The position is a block counter; two streams with equal keys produce
/// identical sequences no matter which thread drives them.
///
/// Channels separate independent uses of one trajectory's randomness
/// (dynamics noise per particle, initial-state sampling, colored-noise start).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t channel = 0);

  /// Standard normal (Box–Muller on one Philox block; the sine branch is cached).
  double normal();
  void normals(std::span<double> out);

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint32_t channel() const noexcept { return channel_; }
  /// Number of Philox blocks consumed so far.
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Philox4x32::Counter next_block();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint32_t channel_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Channel layout shared by every simulator.
namespace channel {
inline constexpr std::uint32_t dynamics(std::uint32_t particle) { return particle; }
inline constexpr std::uint32_t initial_state(std::uint32_t particle) { return 0x4000u + particle; }
inline constexpr std::uint32_t colored_start(std::uint32_t particle) { return 0x8000u + particle; }
}  // namespace channel

}  // namespace stochmech::sde
