#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace energon {

// Deterministic random source. All distribution transforms are written out
// explicitly (not std:: distributions, whose sequences are
// implementation-defined) so that a seed pins the byte-exact output stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1): 53-bit mantissa path.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // One Gaussian draw per call (Box-Muller, second branch discarded).
  // Costs two uniforms; keeps the draw count per sample fixed.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    // Guard the log singularity at u1 == 0.
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    return mean + sd * r * std::cos(two_pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is always tiny vs 2^64, and
    // determinism matters more than the ~2^-50 bias.
    return gen_() % n;
  }

 private:
  std::mt19937_64 gen_;
};

// SplitMix64. Used to derive independent child seeds from a parent seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace energon
