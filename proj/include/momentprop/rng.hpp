/**
 * @file rng.hpp
 * @brief Counter-based random streams: every (seed, sample, step, stream) has its own uniform.
 */
#pragma once

#include <cstdint>

namespace momentprop {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t sample, std::uint64_t step,
                                          std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ sample);
  h = splitmix64(h ^ step);
  return splitmix64(h ^ stream);
}

/// Uniform on the open interval (0, 1).
inline constexpr double stream_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t step,
                                       std::uint64_t stream) {
  return (static_cast<double>(stream_key(seed, sample, step, stream) >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace momentprop
