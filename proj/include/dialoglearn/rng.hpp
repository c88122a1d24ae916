#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace dialoglearn {

std::uint64_t splitmix64(std::uint64_t x);

// Hashes a base seed with up to three stream tags so that independent
// generators (splits, epochs, grid cells) get disjoint streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Deterministic random source. mt19937_64 is fully specified by the standard,
// and all draws below are implemented by hand, so identical seeds give
// identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi);

  // Uniform real in [0, 1) with 53 bits of randomness.
  double uniform_real();

  bool bernoulli(double p) { return uniform_real() < p; }

  // Box-Muller; the second value of each pair is cached.
  double gaussian(double mean, double stddev);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dialoglearn
