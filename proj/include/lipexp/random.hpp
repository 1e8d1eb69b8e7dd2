#pragma once

#include <cstdint>
#include <random>

#include "lipexp/linalg.hpp"

namespace lipexp {

// std::mt19937_64 output is fixed by the standard; the uniform mapping below
// avoids the implementation-defined std::uniform_real_distribution so that
// seeded sample streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for sample `index` of a run seeded with `seed`; independent of
  /// evaluation order.
  static Rng for_index(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix(seed ^ splitmix(index + 0x9E3779B97F4A7C15ULL)));
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <int N>
  Vec<N> in_ball(double radius) {
    for (;;) {
      Vec<N> v;
      for (int i = 0; i < N; ++i) v[i] = uniform(-1.0, 1.0);
      if (v.squaredNorm() < 1.0) return radius * v;
    }
  }

  template <int N>
  Vec<N> unit_vector() {
    for (;;) {
      Vec<N> v = in_ball<N>(1.0);
      const double n = v.norm();
      if (n > 1e-3) return v / n;
    }
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace lipexp
