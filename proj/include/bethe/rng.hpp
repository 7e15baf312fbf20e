#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bethe {

// Deterministic random primitives. std::uniform_*_distribution is
// implementation-defined, so every draw below is spelled out explicitly and
// reproduces bit-identically for a fixed seed.

// splitmix64 step; used to stretch a (seed, counter) pair into an
// independent stream seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Generator for the k-th item of a seeded stream; items can be produced in
// any order (or in parallel) without changing the draw.
inline std::mt19937_64 counter_rng(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ counter));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double rand_u01(std::mt19937_64& g) {
  return double(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound); bound is tiny compared to 2^64 so the
// modulo bias is negligible for the permutation sizes used here.
inline std::uint64_t rand_below(std::mt19937_64& g, std::uint64_t bound) {
  return g() % bound;
}

// Fisher-Yates shuffle producing a uniform permutation of {0..m-1}.
inline std::vector<int> random_permutation(int m, std::mt19937_64& g) {
  std::vector<int> p(m);
  for (int i = 0; i < m; ++i) p[i] = i;
  for (int i = m - 1; i > 0; --i) {
    int j = int(rand_below(g, std::uint64_t(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace bethe
