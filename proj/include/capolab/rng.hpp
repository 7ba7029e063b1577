#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace capolab {

// Deterministic random stream built on mt19937_64. All draws are derived
// from raw engine words through fixed arithmetic (no std::*_distribution),
// so a given seed consumes a fixed, reproducible number of engine steps
// per draw: uniform = 1, normal = 2, categorical = 1.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Integer in [0, n).
  int uniform_int(int n) {
    const int v = static_cast<int>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  // Box-Muller without pair caching: exactly two engine steps per draw.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Index draw by CDF inversion over a probability vector (sums to ~1).
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::uint64_t raw() { return gen_(); }

  // splitmix64 scramble of (base, stream) for independent worker streams.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace capolab
