#pragma once

// Deterministic random streams. mt19937_64 output is specified by the
// standard, and the uniform/normal transforms below are hand-rolled, so the
// same seed yields identical doubles on every platform and worker count.
// std::uniform_real_distribution / normal_distribution are deliberately
// avoided: their algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>

namespace oseledets {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Derives an independent stream from (seed, index), for per-trajectory and
  // per-start reproducibility independent of scheduling.
  Rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    eng_.seed(seq);
  }

  std::uint64_t bits() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // 0 .. n-1, rejection sampled to avoid modulo bias.
  int uniform_int(int n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t v;
    do v = eng_();
    while (v >= limit);
    return static_cast<int>(v % range);
  }

  // Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do u1 = uniform();
    while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace oseledets
