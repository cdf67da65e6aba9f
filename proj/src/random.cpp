#include "mieze/random.hpp"

#include <cmath>

#include "mieze/errors.hpp"

namespace mieze {

namespace {

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) noexcept {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Philox4x64::Counter Philox4x64::block(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

Philox4x64::Philox4x64(std::uint64_t seed, std::uint64_t stream) noexcept : key_{seed, stream} {}

std::uint64_t Philox4x64::next_u64() noexcept {
  if (used_ == 4) {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
    buffer_ = block(counter_, key_);
    used_ = 0;
  }
  return buffer_[used_++];
}

double Philox4x64::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

namespace {

std::uint64_t poisson_multiplication(Philox4x64& rng, double mean) {
  const double limit = std::exp(-mean);
  std::uint64_t x = 0;
  double product = 1.0;
  while (true) {
    product *= rng.next_double();
    if (product > limit) {
      ++x;
    } else {
      return x;
    }
  }
}

std::uint64_t poisson_ptrs(Philox4x64& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.next_double() - 0.5;
    const double v = rng.next_double();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t poisson(Philox4x64& rng, double mean) {
  if (!std::isfinite(mean) || mean < 0.0) throw InvalidInput("Poisson mean must be finite and non-negative");
  if (mean >= 10.0) return poisson_ptrs(rng, mean);
  if (mean == 0.0) return 0;
  return poisson_multiplication(rng, mean);
}

}  // namespace mieze
