#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "graspkit/types.hpp"

namespace graspkit {

/// Seeded random stream. Uniform and normal draws are mapped from raw
/// mt19937_64 output here instead of via std::*_distribution, so sequences
/// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) return 0;
    int v = static_cast<int>(uniform() * n);
    return v >= n ? n - 1 : v;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform direction on the unit sphere.
  Vec3 unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  /// Independent stream derived from this generator's seed and a stream id.
  Rng derive(uint64_t stream) const {
    uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    x = x ^ (x >> 31);
    return Rng(x);
  }

  /// Fisher-Yates shuffle of an index-like container.
  template <typename Container>
  void shuffle(Container& c) {
    for (int i = static_cast<int>(c.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(c[i], c[j]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace graspkit
