#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace slu {

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so results are stable across platforms and standard-library
// versions; std::uniform_* distributions are not portable.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 24 bits of resolution
  float uniform() { return static_cast<float>(next_u64() >> 40) * 0x1p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n); n must be > 0
  size_t index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace slu
