#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace soc {

// Deterministic RNG. All randomness in the project flows through this class so
// that identical seeds give bitwise-identical runs regardless of platform; the
// uniform/normal transforms are spelled out instead of relying on the
// implementation-defined std::*_distribution algorithms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one normal per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // [0, n)
  int64_t randint(int64_t n) { return static_cast<int64_t>(gen_() % static_cast<uint64_t>(n)); }

  // FNV-1a fold of a name into a seed; used to derive independent per-parameter
  // streams so initialization does not depend on construction order.
  static uint64_t fold(uint64_t seed, std::string_view name) {
    uint64_t h = 14695981039346656037ull ^ seed;
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace soc
