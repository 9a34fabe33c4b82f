#ifndef SCVN_RNG_HPP
#define SCVN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace scvn {

// mt19937_64 raw output is specified by the standard, so a fixed seed gives
// the same stream on every platform. The distribution helpers below are
// hand-rolled for the same reason: the std::*_distribution classes are
// implementation-defined and would break byte-identical reproducibility.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream id from a master seed plus salts.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform in [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  return lo + static_cast<int>(uniform_below(
                  rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline double exponential(Rng& rng, double rate) {
  // 1 - uniform01 is in (0,1], keeping the log finite.
  return -std::log(1.0 - uniform01(rng)) / rate;
}

inline double normal(Rng& rng, double mean, double stddev) {
  // Box-Muller; one fresh pair per call keeps the stream position
  // independent of caller history.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Random permutation of 0..n-1.
inline std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  shuffle(p, rng);
  return p;
}

}  // namespace scvn

#endif  // SCVN_RNG_HPP
