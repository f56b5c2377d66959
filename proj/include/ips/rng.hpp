#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ips {

// Stream tags keep independent consumers of one master seed apart.
enum class Tag : std::uint64_t {
  Generic = 1,
  Init,
  Forward,
  Graphical,
  Dual,
  DualGraphical,
  Reaction,
  Percolation,
  Experiment,
  Test,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto w : words) h = splitmix64(h ^ splitmix64(w + 0x13198A2E03707344ULL));
  return h;
}

// Philox4x32-10.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                                std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t(M0) * c[0];
    const std::uint64_t p1 = std::uint64_t(M1) * c[2];
    c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

// Stateless draw: one 64-bit word addressed by (key, a, b).
inline std::uint64_t philox_word(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  auto out = philox4x32({std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b),
                         std::uint32_t(b >> 32)},
                        {std::uint32_t(key), std::uint32_t(key >> 32)});
  return (std::uint64_t(out[1]) << 32) | out[0];
}

inline double u01_from_bits(std::uint64_t bits) {
  return double(bits >> 11) * 0x1.0p-53;
}

/// Counter-based generator: a 64-bit key, a 64-bit stream id and a 64-bit
/// block counter. Two Rngs with different (key, stream) never overlap.
class Rng {
 public:
  Rng(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    const std::uint64_t h = hash_words(path);
    return Rng(splitmix64(seed ^ 0x5851F42D4C957F2DULL), h);
  }
  static Rng derive(std::uint64_t seed, Tag tag, std::uint64_t rep, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
    return derive(seed, {std::uint64_t(tag), rep, a, b});
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }
  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    return (std::uint64_t(next_u32()) << 32) | lo;
  }
  // [0, 1)
  double uniform() { return u01_from_bits(next_u64()); }
  // (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n); Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 0xFFFFFFFFull) {
      const std::uint32_t n32 = std::uint32_t(n);
      std::uint64_t m = std::uint64_t(next_u32()) * n32;
      std::uint32_t lo = std::uint32_t(m);
      if (lo < n32) {
        const std::uint32_t t = std::uint32_t(-n32) % n32;
        while (lo < t) {
          m = std::uint64_t(next_u32()) * n32;
          lo = std::uint32_t(m);
        }
      }
      return m >> 32;
    }
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t x;
    do x = next_u64();
    while (x >= limit);
    return x % n;
  }
  std::uint64_t poisson(double mean);

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill() {
    buf_ = philox4x32({std::uint32_t(ctr_), std::uint32_t(ctr_ >> 32), std::uint32_t(stream_),
                       std::uint32_t(stream_ >> 32)},
                      {std::uint32_t(key_), std::uint32_t(key_ >> 32)});
    ++ctr_;
    pos_ = 0;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t ctr_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

inline std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0) return 0;
  if (mean < 30) {
    const double l = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform_pos();
    while (p > l) {
      ++k;
      p *= uniform_pos();
    }
    return k;
  }
  // Large means: count arrivals of a unit-rate process up to `mean`.
  std::uint64_t k = 0;
  double t = exponential(1.0);
  while (t <= mean) {
    ++k;
    t += exponential(1.0);
  }
  return k;
}

}  // namespace ips
