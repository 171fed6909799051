#pragma once

// Counter-based random streams.
//
// Every stream is a Philox4x32-10 generator whose key and upper counter words
// are derived from a SeedSpec (master seed, iteration, episode, purpose tag).
// Draw n of a stream depends only on (SeedSpec, n), so the order in which
// episodes are simulated, or the number of threads simulating them, never
// changes any result.
//
// Label mixing (documented because results depend on it bit-for-bit):
//   tag_hash = FNV-1a-64(purpose)
//   h  = mix64(master_seed + G)
//   h  = mix64(h ^ (iteration + G))
//   h  = mix64(h ^ (episode + G))
//   h  = mix64(h ^ (tag_hash + G))
//   key      = (lo32(h), hi32(h))
//   ctr[2,3] = (lo32(h2), hi32(h2)) with h2 = mix64(h ^ 0xD1B54A32D192ED03)
//   ctr[0,1] = 64-bit block index
// where mix64 is the SplitMix64 finalizer and G = 0x9E3779B97F4A7C15.
// Doubles and integers are produced by hand-written transforms rather than
// <random> distributions, whose output is implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

namespace hcirl {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline constexpr Counter round(const Counter& c, const Key& k) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds, the standard Random123 configuration.
inline constexpr Counter block(Counter c, Key k) noexcept {
  c = round(c, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kWeyl0;
    k[1] += kWeyl1;
    c = round(c, k);
  }
  return c;
}

}  // namespace philox

/// Identifies one random stream. Identical specs give identical streams.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t iteration = 0;
  std::uint64_t episode = 0;
  std::string purpose;
};

class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(philox::Key key, std::uint32_t c2, std::uint32_t c3) noexcept
      : key_(key), c2_(c2), c3_(c3) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    if (buffered_ == 0) {
      const philox::Counter out = philox::block(
          {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), c2_, c3_},
          key_);
      ++block_;
      buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
      buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
      buffered_ = 2;
    }
    return buffer_[2 - buffered_--];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  philox::Key key_;
  std::uint32_t c2_;
  std::uint32_t c3_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t label_hash(const SeedSpec& spec) noexcept {
  std::uint64_t h = mix64(spec.master_seed + kGolden);
  h = mix64(h ^ (spec.iteration + kGolden));
  h = mix64(h ^ (spec.episode + kGolden));
  h = mix64(h ^ (fnv1a64(spec.purpose) + kGolden));
  return h;
}

inline RandomStream derive_stream(const SeedSpec& spec) noexcept {
  const std::uint64_t h = label_hash(spec);
  const std::uint64_t h2 = mix64(h ^ 0xD1B54A32D192ED03ULL);
  return RandomStream({static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)},
                      static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32));
}

inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t iteration,
                                  std::uint64_t episode, std::string_view purpose) {
  return derive_stream(SeedSpec{master_seed, iteration, episode, std::string(purpose)});
}

}  // namespace hcirl
