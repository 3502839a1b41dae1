#pragma once

#include <cstdint>

namespace hamest::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xFF51AFD7ED558CCDULL;
  z ^= z >> 33;
  z *= 0xC4CEB9FE1A85EC53ULL;
  z ^= z >> 33;
  return z;
}

// Deterministic stream keyed by (seed, a, b, c). Streams with distinct keys
// are independent; the draw sequence for a fixed key is identical on every
// platform (pure integer ops plus exact binary-to-double scaling).
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                  std::uint64_t c = 0)
      : state_(seed) {
    mix_in(a);
    mix_in(b);
    mix_in(c);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Sum of n Bernoulli(p) draws. p <= 0 gives 0 and p >= 1 gives n exactly.
  int binomial(int n, double p) {
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (uniform01() < p) ++c;
    }
    return c;
  }

 private:
  void mix_in(std::uint64_t k) {
    state_ = mix64(state_ + 0x9E3779B97F4A7C15ULL * (k + 1));
  }

  std::uint64_t state_;
};

}  // namespace hamest::rng
