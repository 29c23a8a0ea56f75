#pragma once

#include <cstddef>
#include <cstdint>

namespace tclean {

/// SplitMix64 generator. Every random choice in the toolkit draws from this
/// so that runs are reproducible across platforms and implementations:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() takes the top 53 bits of next() scaled by 2^-53.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform in [0, n): floor(uniform() * n). n must be > 0.
  std::size_t index(std::size_t n) noexcept {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal via Box-Muller (one value per call, the sine branch is discarded).
  double normal() noexcept;

  double lognormal(double mu, double sigma) noexcept;

 private:
  std::uint64_t state_;
};

/// Independent stream seed for (seed, stream): first output of SplitMix64
/// seeded with seed ^ (stream * golden-ratio constant).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace tclean
