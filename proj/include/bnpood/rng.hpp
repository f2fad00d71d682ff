#ifndef BNPOOD_RNG_HPP
#define BNPOOD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace bnpood {

// Deterministic counter-seeded generator (splitmix64 core). Streams are
// derived by hashing a tuple of identifiers, so parallel producers get
// independent, order-free sequences from the same user seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ kGolden) {}

  static Rng from_stream(std::uint64_t seed, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = seed;
    h = mix(h + 0x9e3779b97f4a7c15ULL + a);
    h = mix(h + 0x9e3779b97f4a7c15ULL + b);
    h = mix(h + 0x9e3779b97f4a7c15ULL + c);
    return Rng(h);
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1), never exactly zero (safe under log).
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform_pos();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.283185307179586477 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Rate-1 draw.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double gamma(double shape, double rate) { return gamma(shape) / rate; }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace bnpood

#endif
