#ifndef DYNRW_RNG_HPP
#define DYNRW_RNG_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace dynrw {

/// Philox4x32-10 block function. Pure: the same (counter, key) always maps to
/// the same 128 output bits on every platform.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t prod0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t prod1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(prod1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(prod1),
             static_cast<std::uint32_t>(prod0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(prod0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

/// Independent sub-sequences of one replica stream. Walker and environment
/// draws never share counters, and the initial field is addressed by site.
enum class StreamDomain : std::uint32_t {
  Walker = 0,
  Environment = 1,
  InitialField = 2,
};

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Per-replica seed from (master seed, point key, replica index).
///
/// seed = mix64(mix64(master + φ) ^ mix64(mix64(point_key) + replica)), with
/// φ the 64-bit golden-ratio constant. For a fixed master seed and point key
/// the map replica -> seed is injective, and distinct point keys only collide
/// with probability ~2^-64 per pair.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point_key,
                                    std::uint64_t replica) noexcept {
  const std::uint64_t base = mix64(master + 0x9E3779B97F4A7C15ull);
  return mix64(base ^ mix64(mix64(point_key) + replica));
}

/// Deterministic stream of uniforms identified by (seed, stream_index,
/// domain). The stream index must be below 2^60.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index,
            StreamDomain domain = StreamDomain::Walker) noexcept
      : seed_(seed), stream_(stream_index), domain_(domain) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_; }
  StreamDomain domain() const noexcept { return domain_; }

  /// Fresh stream with the same identity in another domain, counter at 0.
  RngStream substream(StreamDomain domain) const noexcept {
    return RngStream(seed_, stream_, domain);
  }

  std::uint32_t next_u32() noexcept {
    if (pos_ >= 4)
      refill();
    return buffer_[pos_++];
  }

  /// Two words of one block; a lone leftover word is skipped.
  std::uint64_t next_u64() noexcept {
    if (pos_ >= 3)
      refill();
    const std::uint64_t lo = buffer_[pos_];
    const std::uint64_t hi = buffer_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1] with 53 random bits.
  double uniform_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }

  bool bernoulli(double prob) noexcept { return uniform() < prob; }

  /// Unbiased integer in [0, bound), bound > 0, from one 32-bit word in the
  /// common case (Lemire's multiply-shift with rejection of the short tail).
  std::uint32_t below(std::uint32_t bound) noexcept {
    std::uint64_t m = std::uint64_t{next_u32()} * bound;
    if (static_cast<std::uint32_t>(m) < bound) {
      const std::uint32_t threshold = (0u - bound) % bound;
      while (static_cast<std::uint32_t>(m) < threshold)
        m = std::uint64_t{next_u32()} * bound;
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Fills out[0..count) with independent uniform integers in [0, bound)
  /// using as few 64-bit words as possible: each word yields k draws with
  /// bound^k <= 2^64 by chained multiply-shift, and the word is rejected as a
  /// whole when the chain lands in the short tail, which keeps every draw
  /// exactly uniform (Brackett-Rozinsky and Lemire, 2024).
  void below_batch(std::uint32_t bound, std::uint32_t* out, std::size_t count) noexcept;

  std::uint64_t poisson(double mean) noexcept;

  /// Number of 128-bit blocks consumed so far.
  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32) |
            (static_cast<std::uint32_t>(domain_) << 28)};
    buffer_ = Philox4x32::block(
        ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++block_;
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  StreamDomain domain_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  unsigned pos_ = 4;
};

/// One-shot uniform on [0, 1) addressed by an arbitrary 64-bit index within
/// the InitialField domain of (seed, stream_index). Used to give every
/// environment kind the same initial Bernoulli configuration.
double addressed_uniform(std::uint64_t seed, std::uint64_t stream_index,
                         std::uint64_t address) noexcept;

}  // namespace dynrw

#endif
