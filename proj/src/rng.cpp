#include "dynrw/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dynrw {

void RngStream::below_batch(std::uint32_t bound, std::uint32_t* out,
                            std::size_t count) noexcept {
  if (bound <= 1) {
    std::fill(out, out + count, 0u);
    return;
  }
  __extension__ typedef unsigned __int128 u128;
  const u128 two64 = u128{1} << 64;
  unsigned per_word = 0;
  u128 product = 1;
  while (product * bound <= two64) {
    product *= bound;
    ++per_word;
  }
  // product == 2^64 (a power-of-two bound) wraps to 0 and needs no rejection.
  const auto range = static_cast<std::uint64_t>(product);
  const std::uint64_t threshold = range == 0 ? 0 : (0 - range) % range;
  auto fill_word = [&](std::uint32_t* dst) {
    for (;;) {
      std::uint64_t low = next_u64();
      for (unsigned j = 0; j < per_word; ++j) {
        const u128 m = u128{low} * bound;
        dst[j] = static_cast<std::uint32_t>(m >> 64);
        low = static_cast<std::uint64_t>(m);
      }
      if (low >= threshold)
        return;
    }
  };
  std::size_t filled = 0;
  for (; filled + per_word <= count; filled += per_word)
    fill_word(out + filled);
  if (filled < count) {
    std::uint32_t rest[64];
    fill_word(rest);
    std::copy(rest, rest + (count - filled), out + filled);
  }
}

std::uint64_t RngStream::poisson(double mean) noexcept {
  if (!(mean > 0.0))
    return 0;
  if (mean < 10.0) {
    // Multiplication of uniforms until the product drops below e^-mean.
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // PTRS transformed rejection, W. Hörmann (1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr)
      return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us))
      continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

double addressed_uniform(std::uint64_t seed, std::uint64_t stream_index,
                         std::uint64_t address) noexcept {
  const Philox4x32::Counter ctr = {
      static_cast<std::uint32_t>(address), static_cast<std::uint32_t>(address >> 32),
      static_cast<std::uint32_t>(stream_index),
      static_cast<std::uint32_t>(stream_index >> 32) |
          (static_cast<std::uint32_t>(StreamDomain::InitialField) << 28)};
  const auto out = Philox4x32::block(
      ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (std::uint64_t{out[1]} << 32) | out[0];
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace dynrw
