#pragma once

#include <cstdint>
#include <random>

namespace ifs {

/// Deterministic seeded generator. All randomness in the library flows
/// through this wrapper, and all distributions are hand-rolled on top of
/// the raw 64-bit stream, so identical seeds give identical results on
/// every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [-1, 1].
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  bool next_bool() { return (engine_() >> 63) != 0; }

  /// Independent stream for sub-task `stream` of a run seeded with `seed`
  /// (splitmix64 finalizer; used for sweeps and ensemble members).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace ifs
