#pragma once

#include <array>
#include <cstdint>

namespace hybridcorr {

/// Philox4x32-10 (Salmon et al., Random123). A pure function of a 128-bit
/// counter and a 64-bit key; every stochastic routine in the library draws
/// from it so that outputs are reproducible across platforms.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Sequential view over one Philox substream. The counter word layout is
/// {position lo, position hi, stream lo, stream hi}; the key is the seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t position = 0) noexcept
      : seed_(seed), stream_(stream), position_(position) {}

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; consumes two 64-bit words.
  double normal() noexcept;

  /// Index of the next Philox block to be generated.
  std::uint64_t position() const noexcept { return position_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Two uniforms on [0, 1) from a single Philox block; used by the samplers so
/// that draw `index` of a run depends only on (seed, stream, index).
std::array<double, 2> uniform_pair(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t index) noexcept;

}  // namespace hybridcorr
