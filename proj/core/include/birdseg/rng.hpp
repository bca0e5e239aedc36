#pragma once

#include <cstdint>
#include <vector>

namespace birdseg {

/// xoshiro256++ seeded through splitmix64. The <random> distributions are
/// implementation-defined, so everything that must reproduce byte-identical
/// artifacts (synthesis, weight init, shuffling) goes through this generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Marsaglia's polar method.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent stream seed, used for per-scene seeds so corpus
  /// generation stays deterministic under any scheduling.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace birdseg
