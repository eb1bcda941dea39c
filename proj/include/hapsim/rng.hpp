#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace hapsim {

/// SplitMix64 step; used for seed derivation only, never for sampling.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives a decorrelated child seed from (master, stream, substream).
/// Counter-based so that trial t / purpose p always maps to the same seed
/// regardless of execution order or worker count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream = 0);

/// Deterministic random stream. Gaussian variates come from an explicit
/// Box-Muller transform so the draw sequence does not depend on the
/// standard library's distribution implementation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform integer in [0, bound). bound must be >= 1.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Standard normal N(0, 1).
  double gaussian();

  /// Circularly-symmetric complex Gaussian CN(0, variance).
  std::complex<double> cgaussian(double variance);

 private:
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace hapsim
