#pragma once

#include <array>
#include <cstdint>

namespace mieze {

// Philox4x64-10 counter-based generator. A stream keyed by (seed, stream id)
// reproduces numpy's Philox(key=[seed, stream]) output, so draws are
// identical across platforms and languages.
class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr std::uint32_t kVersion = 1;

  // Ten-round bijection of one counter block.
  static Counter block(Counter counter, Key key) noexcept;

  Philox4x64(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  // [0, 1) with 53 random bits.
  double next_double() noexcept;

 private:
  Key key_;
  Counter counter_{};
  Counter buffer_{};
  int used_ = 4;
};

// Poisson draw matching numpy's Generator.poisson: multiplication method
// below mean 10, PTRS rejection above. Throws InvalidInput for negative or
// non-finite means.
std::uint64_t poisson(Philox4x64& rng, double mean);

}  // namespace mieze
