#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace scatter {

// xoshiro256++ with splitmix64 seeding. Bit-identical across platforms.
// Substreams derive a fresh generator from the stored seed and a tag, so
// consumers (data, minibatches, net init, ...) stay decoupled.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  Rng substream(uint64_t tag) const {
    uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ull * (tag + 1));
    return Rng(splitmix64(x));
  }

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare,
  // so the stream position is a fixed function of the number of calls.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Unbiased integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    uint64_t bound = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t x = next_u64();
      if (x >= bound) return x % n;
    }
  }

  // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 boosted via
  // Gamma(shape+1) * U^(1/shape).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform_pos();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::array<uint64_t, 5> serialize() const { return {seed_, s_[0], s_[1], s_[2], s_[3]}; }

  static Rng deserialize(const std::array<uint64_t, 5>& w) {
    Rng r(w[0]);
    r.s_ = {w[1], w[2], w[3], w[4]};
    return r;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  std::array<uint64_t, 4> s_;
};

}  // namespace scatter
