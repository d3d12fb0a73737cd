#pragma once
#include <cstdint>
#include <cmath>
#include <numbers>

// Counter-based RNG: every variate is addressable as mix(seed, counter).
// Couplings and trajectories must be reproducible from (seed, indices) alone,
// independent of generation order and worker count, so stateful stdlib
// engines/distributions are not usable here.
namespace dsyk::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed ^ (counter * kGolden)) + counter);
}

// map to (0,1]; never returns 0 so log(u) is safe
inline double to_unit(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t counter) {
  return to_unit(mix(seed, counter));
}

// standard normal, Box-Muller (cos branch only; counters stay independent)
inline double gaussian(std::uint64_t seed, std::uint64_t counter) {
  double u1 = to_unit(mix(seed, 2 * counter));
  double u2 = to_unit(mix(seed, 2 * counter + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// sequential view keyed by up to three stream ids
struct Stream {
  std::uint64_t key;
  std::uint64_t n = 0;
  explicit Stream(std::uint64_t seed, std::uint64_t a = 0,
                  std::uint64_t b = 0, std::uint64_t c = 0)
      : key(mix(mix(mix(seed, a), b), c)) {}
  double uniform() { return to_unit(mix(key, n++)); }
  std::uint64_t bits() { return mix(key, n++); }
};

}  // namespace dsyk::rng
