#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bmrf {

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent stream seeds from counters.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_counters(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Counter-based stream: the same (seed, counters) always yields the same
// generator, independent of how many other streams were used before.
inline Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  return Rng{hash_counters(seed, counters)};
}

// 53-bit uniform on [0, 1); identical on every platform, unlike
// std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

inline double normal(Rng& rng, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  return d(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return d(rng);
}

}  // namespace bmrf
