#ifndef PIKL_RNG_H_
#define PIKL_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace pikl {

// Deterministic random stream, algorithm id "pikl-mt64-v1".
//
//   engine : std::mt19937_64 seeded with SplitMix64(seed)
//   int    : rejection-sampled modulo over the raw 64-bit output
//   real   : top 53 bits scaled by 2^-53, in [0, 1)
//   normal : Box-Muller on two reals, one value per call
//   shuffle: Fisher-Yates running from the back of the range
//
// std::mt19937_64 output is fixed by the standard; the distributions are
// written out here because the std:: ones are implementation-defined. Any
// change to this class must bump kRngVersion.
inline constexpr int kRngVersion = 1;

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from a parent seed and a stream index.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  return SplitMix64(SplitMix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(SplitMix64(seed)) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n) {
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int UniformInt(int lo, int hi_inclusive) {
    return lo + static_cast<int>(
        UniformInt(static_cast<uint64_t>(hi_inclusive - lo + 1)));
  }

  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  bool Bernoulli(double p) { return Uniform() < p; }

  double Normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + stddev * z;
  }

  // Index drawn proportionally to non-negative weights. Returns weights.size()
  // if every weight is zero.
  size_t Categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return weights.size();
    double u = Uniform() * total;
    size_t last_positive = weights.size();
    for (size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = UniformInt(static_cast<uint64_t>(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pikl

#endif  // PIKL_RNG_H_
