#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace promofraud {

// Deterministic RNG facade. std::mt19937_64 is a fixed algorithm, but the
// standard distributions are implementation-defined, so every mapping from
// raw bits to a value is done here. Byte-identical outputs for a given seed
// are part of the pipeline contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Modulo bias is irrelevant at the
  // range sizes used here and keeps the mapping platform-stable.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  bool chance(double p) { return uniform() < p; }

  double normal(double mean, double sd) {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * uniform();
    return mean + sd * mag * std::cos(ang);
  }

  // Knuth's product method; fine for the small means used by the generator.
  int poisson(double mean) {
    const double limit = std::exp(-mean);
    double prod = 1.0;
    int n = -1;
    do {
      ++n;
      prod *= uniform();
    } while (prod > limit);
    return n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  // Independent stream derived from the original seed; used so that adding
  // draws in one generation phase does not perturb the others.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace promofraud
