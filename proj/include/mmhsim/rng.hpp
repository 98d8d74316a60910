// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams for reproducible Monte Carlo simulation.
//
// Every stochastic component draws from its own RngStream, derived from
// (master seed, module tag, index...). Streams are independent by
// construction, so the draw order of one module can never perturb another,
// and re-running with the same seed reproduces every output bit for bit.
// The generator is xoshiro256++ with hand-rolled samplers; nothing here
// depends on the standard library's unspecified distribution algorithms.

#ifndef MMHSIM_RNG_HPP
#define MMHSIM_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

namespace mmhsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

class RngStream {
public:
  explicit RngStream(std::uint64_t seed) { init(seed); }

  /// Stream derived from (master seed, module tag, indices...).
  RngStream(std::uint64_t master, std::string_view tag,
            std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(master);
    h = mix_seed(h, fnv1a64(tag));
    for (std::uint64_t v : indices) h = mix_seed(h, v);
    init(h);
  }

  /// Next raw 64-bit value (xoshiro256++).
  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Integer uniform in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>((static_cast<unsigned __int128>(next()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  /// Gaussian via Box-Muller (one value per call; two uniforms consumed).
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  /// Circularly-symmetric complex Gaussian with E[|z|^2] = variance.
  std::complex<double> complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    return {normal(0.0, s), normal(0.0, s)};
  }

  /// Poisson by sequential inversion; Gaussian approximation for large mean.
  int poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 500.0) {
      const double v = std::round(normal(mean, std::sqrt(mean)));
      return v < 0.0 ? 0 : static_cast<int>(v);
    }
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 100000) {
      ++k;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }

  /// Exponential with unit rate.
  double exponential() {
    double u = uniform();
    if (u < 0x1.0p-60) u = 0x1.0p-60;
    return -std::log(u);
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void init(std::uint64_t seed) {
    // Expand one 64-bit seed into the 256-bit state; all-zero is impossible.
    std::uint64_t h = seed;
    for (auto& w : s_) {
      h = splitmix64(h);
      w = h;
    }
  }

  std::uint64_t s_[4]{};
};

}  // namespace mmhsim

#endif  // MMHSIM_RNG_HPP
