#pragma once

#include <cstdint>
#include <random>

namespace hetsar {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, index): mt19937_64 seeded through splitmix64.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (index + 0x632be59bd9b4e019ULL)));
}

inline constexpr const char* kRngName = "mt19937_64/splitmix64(seed,index)";

}  // namespace hetsar
