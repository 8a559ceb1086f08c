#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace statenet {

// Deterministic RNG used everywhere randomness is needed. All
// distributions are generated here rather than through std::
// distribution objects, so a given seed yields the same stream on every
// standard library. Substreams are derived by hashing the parent seed
// with caller-chosen ids (e.g. epoch and image index), which makes
// per-image augmentation independent of worker scheduling.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 24-bit resolution.
  float uniform() {
    return static_cast<float>(next_u64() >> 40) * 0x1p-24f;
  }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  bool bernoulli(float p) { return uniform() < p; }

  // Uniform integer in [0, n). Modulo bias is negligible for the index
  // ranges used here (dataset sizes, shuffle positions).
  size_t index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  // In-place Fisher-Yates shuffle with a pinned algorithm (std::shuffle
  // is implementation-defined).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derived substream: child seed = hash(parent seed, ids...).
  template <typename... Ids>
  Rng derive(Ids... ids) const {
    uint64_t h = seed_;
    ((h = mix(h, static_cast<uint64_t>(ids))), ...);
    return Rng(h);
  }

  static uint64_t mix(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combined words.
    uint64_t z = a + 0x9e3779b97f4a7c15ULL + b;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace statenet
