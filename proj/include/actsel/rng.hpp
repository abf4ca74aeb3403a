#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace actsel {

// Splitmix64 counter generator. Deterministic across platforms, cheap to
// split into independent streams by seed mixing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Standard Gumbel(0,1) sample, used by the top-k sampler variant.
  double next_gumbel() {
    double u = next_double();
    while (u <= 0.0) u = next_double();
    return -std::log(-std::log(u));
  }

  // Derives an independent stream for a named role under a run seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t role) {
    Rng mix(seed ^ (0x6a09e667f3bcc909ull * (role + 1)));
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace actsel
