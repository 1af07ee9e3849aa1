#pragma once

#include <cmath>
#include <cstdint>

namespace ibgeo {

/// Stateless counter-based generator (splitmix64 over a keyed counter).
/// The draw at (seed, counter) is identical regardless of call order, which
/// makes per-sample parallel generation deterministic.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t counter) const {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on counters (2c, 2c+1).
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * M_PI * u2);
  }

  /// Derive an independent stream for a substream index.
  CounterRng stream(std::uint64_t idx) const {
    return CounterRng(bits(0xC0FFEE0000000000ULL ^ idx));
  }

 private:
  std::uint64_t seed_;
};

}  // namespace ibgeo
