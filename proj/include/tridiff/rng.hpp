#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Philox4x32-10 engine. A stream
// is identified by a 64-bit key and a 64-bit stream index; the remaining 64
// counter bits enumerate draws. Keys are derived from a master seed and a
// purpose label:
//
//   key    = splitmix64(seed ^ fnv1a64(label))
//   stream = index
//
// Nested seeds (master -> grid point -> iteration) are produced by
// derive_seed(), so that any draw is a pure function of (master seed, path).

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace tridiff::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(parent ^ fnv1a64(label)) + index);
}

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

constexpr Counter philox4x32_10(Counter ctr, Key key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53U;
  constexpr std::uint32_t kM1 = 0xCD9E8D57U;
  constexpr std::uint32_t kW0 = 0x9E3779B9U;
  constexpr std::uint32_t kW1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

// UniformRandomBitGenerator producing 64-bit words; usable with <random>.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::string_view purpose, std::uint64_t stream = 0) noexcept
      : key_(splitmix64(seed ^ fnv1a64(purpose))), stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (buffered_ == 0) {
      const Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
      const Key key{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
      out_ = philox4x32_10(ctr, key);
      ++block_;
      buffered_ = 2;
    }
    const std::size_t at = 2 * (2 - buffered_);
    --buffered_;
    return (std::uint64_t{out_[at + 1]} << 32) | out_[at];
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Counter out_{};
  int buffered_ = 0;
};

}  // namespace tridiff::rng
