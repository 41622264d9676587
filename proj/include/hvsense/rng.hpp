// Seeded PRNG for deterministic Monte Carlo runs.
//
// xoshiro256++ core with splitmix64 seeding. Distributions are implemented
// by hand so that a given seed produces the same stream on every platform
// and standard library.
#ifndef HVSENSE_RNG_HPP
#define HVSENSE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace hvsense {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x853C49E6748FEA9BULL) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  /// Derives an independent stream; deterministic in (this seed, index).
  Rng fork(std::uint64_t index) const {
    std::uint64_t sm = state_[0] ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    return Rng(splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return n == 0 ? 0 : next_u64() % n;
  }

  /// Standard normal via Marsaglia polar method.
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double gauss(double mean, double sigma) { return mean + sigma * gauss(); }

  /// Rayleigh amplitude with E[X^2] = mean_square.
  double rayleigh(double mean_square = 1.0) {
    const double u = uniform();
    return std::sqrt(-mean_square * std::log1p(-u));
  }

  /// Poisson count. Large means are split into chunks so the Knuth product
  /// never underflows; the split is exact in distribution.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_knuth(30.0);
      mean -= 30.0;
    }
    return total + poisson_knuth(mean);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    double prod = 1.0;
    std::uint64_t n = 0;
    do {
      prod *= uniform();
      ++n;
    } while (prod > limit);
    return n - 1;
  }

  std::uint64_t state_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hvsense

#endif  // HVSENSE_RNG_HPP
