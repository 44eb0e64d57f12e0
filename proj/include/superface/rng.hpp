#ifndef SUPERFACE_RNG_HPP
#define SUPERFACE_RNG_HPP

// Seeded random streams. The engine is std::mt19937_64 (its output sequence
// is fixed by the standard); the uniform/normal transforms are implemented
// here because the std:: distributions are implementation-defined.
// Streams are derived from (seed, path...) so workers and samples get
// independent, reproducible randomness.

#include <cstdint>
#include <initializer_list>
#include <random>

#include "superface/detmath.hpp"

namespace sf {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL)); }

class RngStream {
 public:
  explicit RngStream(uint64_t seed) : eng_(seed) {}

  static RngStream derive(uint64_t seed, std::initializer_list<uint64_t> path) {
    uint64_t s = splitmix64(seed);
    for (uint64_t p : path) s = mix_seed(s, p);
    return RngStream(s);
  }

  uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n)
  uint64_t below(uint64_t n) {
    // Lemire-style rejection; unbiased and deterministic
    if (n == 0) return 0;
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // standard normal, Box-Muller over the deterministic log/cos
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * detmath::dlog(u1));
    double s, c;
    detmath::dsincos(2.0 * detmath::kPi * u2, s, c);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Poisson: Knuth for small lambda, rounded normal approximation above.
  int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
      double l = detmath::dexp(-lambda);
      int64_t k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > l);
      return k - 1;
    }
    double v = normal(lambda, std::sqrt(lambda));
    return v < 0.0 ? 0 : static_cast<int64_t>(v + 0.5);
  }

  template <class It>
  void shuffle(It first, It last) {
    auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sf

#endif
