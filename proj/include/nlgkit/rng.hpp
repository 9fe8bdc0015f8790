#pragma once

// Seedable, splittable random source with a fully specified algorithm.
//
// The generator is SplitMix64 (Steele, Lea & Flood 2014):
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Bounded draws use rejection sampling on the top of the 64-bit range so the
// result is unbiased and identical on every platform:
//   limit = 2^64 - (2^64 mod n); draw x until x < limit; return x mod n
//
// Child streams are derived from (parent seed, label) by hashing the label
// with 64-bit FNV-1a, xoring it into the seed and running one SplitMix64 step.
// Nothing here depends on <random> distributions, whose output is
// implementation-defined.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace nlgkit {

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

  /// Seed of a child stream named `label`. Pure function of its inputs.
  static constexpr std::uint64_t derive(std::uint64_t seed, std::string_view label) noexcept {
    return splitmix64_mix((seed ^ fnv1a64(label)) + 0x9E3779B97F4A7C15ULL);
  }

  Rng split(std::string_view label) const noexcept { return Rng(derive(state_, label)); }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    // 2^64 mod bound, computed without 128-bit arithmetic.
    const std::uint64_t rem = (0 - bound) % bound;
    const std::uint64_t limit = 0 - rem;  // == 2^64 - rem (mod 2^64)
    for (;;) {
      const std::uint64_t x = next();
      if (rem == 0 || x < limit) return x % bound;
    }
  }

  /// Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    shuffle(std::span<T>(items));
  }

  /// `count` distinct values from [0, population), in draw order
  /// (partial Fisher-Yates over the identity permutation).
  std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count) {
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) pool[i] = i;
    if (count > population) count = population;
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(below(population - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
  }

private:
  std::uint64_t state_;
};

}  // namespace nlgkit
