#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace jamsim {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to spread nearby seeds into unrelated streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, replication, purpose).
inline Rng make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t purpose = 0) {
  return Rng(mix_seed(mix_seed(seed + replication) ^ (purpose * 0xd6e8feb86659fd93ULL)));
}

// Top 53 bits as a double in [0, 1). std::uniform_real_distribution goes
// through generate_canonical, which is several times slower in libstdc++.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Hands out a 64-bit draw a few bits at a time. For hot loops that need many
// coin flips or small uniform integers.
class BitPool {
 public:
  explicit BitPool(Rng& rng) : rng_(rng) {}

  // k in [1, 32] fresh bits.
  std::uint64_t take(unsigned k) {
    if (left_ < k) {
      word_ = rng_();
      left_ = 64;
    }
    const std::uint64_t v = word_ & ((std::uint64_t{1} << k) - 1);
    word_ >>= k;
    left_ -= k;
    return v;
  }

  // P(true) = round(p * 2^32) / 2^32, i.e. within 2^-33 of p.
  static std::uint64_t threshold(double p) { return static_cast<std::uint64_t>(std::llround(p * 0x1.0p32)); }
  bool coin(std::uint64_t thr) { return take(32) < thr; }

 private:
  Rng& rng_;
  std::uint64_t word_ = 0;
  unsigned left_ = 0;
};

// Circularly symmetric complex Gaussian with total variance `var`. Boost's
// normal sampler is a ziggurat, markedly cheaper than polar or Box-Muller.
inline std::complex<double> complex_normal(Rng& rng, double var) {
  boost::random::normal_distribution<double> nd(0.0, std::sqrt(0.5 * var));
  const double re = nd(rng);
  return {re, nd(rng)};
}

}  // namespace jamsim
