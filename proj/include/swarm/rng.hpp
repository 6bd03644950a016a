// Deterministic random streams for initial conditions and manifold sampling.
//
// Generator: xoshiro256** (Blackman & Vigna) seeded through splitmix64.
// It is fully specified here so that runs reproduce bit-for-bit across
// platforms; std::mt19937 distributions are implementation-defined and
// would break that guarantee.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace swarm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collision-resistant combination of a base seed with a counter; the
// backbone of the counter-split streams used by parallel sampling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s = index ^ 0x632be59bd9b4e019ULL;
  const std::uint64_t b = splitmix64(s);
  s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Independent stream for a (seed, index) pair. Used to split work across
  // samples so that results do not depend on worker count or evaluation
  // order.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t sm = seed;
    std::uint64_t a = splitmix64(sm);
    sm = index ^ 0xd1b54a32d192ed03ULL;
    std::uint64_t b = splitmix64(sm);
    return Rng(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (always consumes two uniforms).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform direction on the unit sphere in R^d.
  std::vector<double> unit_vector(std::size_t d) {
    std::vector<double> v(d);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& c : v) {
        c = normal();
        norm2 += c * c;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : v) c *= inv;
    return v;
  }

  // Volume-uniform point in the ball of radius r.
  std::vector<double> in_ball(std::size_t d, double r) {
    auto v = unit_vector(d);
    const double radius = r * std::pow(uniform(), 1.0 / static_cast<double>(d));
    for (auto& c : v) c *= radius;
    return v;
  }

  // Volume-uniform point in the annulus r_lo <= |x| <= r_hi.
  std::vector<double> in_annulus(std::size_t d, double r_lo, double r_hi) {
    auto v = unit_vector(d);
    const double dd = static_cast<double>(d);
    const double lo_d = std::pow(r_lo, dd);
    const double hi_d = std::pow(r_hi, dd);
    const double radius = std::pow(lo_d + uniform() * (hi_d - lo_d), 1.0 / dd);
    for (auto& c : v) c *= radius;
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4]{};
};

}  // namespace swarm
