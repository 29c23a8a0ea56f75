#include "tclean/rng.hpp"

#include <cmath>
#include <numbers>

namespace tclean {

double SplitMix64::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SplitMix64::lognormal(double mu, double sigma) noexcept {
  return std::exp(mu + sigma * normal());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 g(seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  return g.next();
}

}  // namespace tclean
