/*
 * Deterministic random streams.
 *
 * The simulator's reproducibility contract (identical output bytes for an
 * identical seed, regardless of worker count) rules out std:: distributions,
 * whose draw sequences are implementation-defined. Everything here is a
 * fixed-algorithm splitmix64 chain, so a (seed, purpose, node) key always
 * yields the same draw sequence.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "blemesh/time.hpp"

namespace blemesh {

inline std::uint64_t splitmix64_step(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Collapses (seed, tag) into a new stream seed. Used for sweep cells,
/// replication substreams, and per-node purpose streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64_step(s);
  s = a ^ (tag + 0x9E3779B97F4A7C15ull);
  splitmix64_step(s);
  return splitmix64_step(s);
}

class RandomStream {
 public:
  RandomStream() : state_(0) {}
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_step(state_); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const double span = static_cast<double>(hi - lo + 1);
    auto offset = static_cast<std::int64_t>(uniform01() * span);
    if (offset > hi - lo) offset = hi - lo;
    return lo + offset;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// Box-Muller; consumes exactly two draws per call.
  double normal(double mean, double sigma) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace blemesh
