#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace latfact {

// All randomness in the project flows through mt19937_64 instances whose
// seeds derive from a single root seed via split_seed. mt19937_64 and the
// helpers below are fully specified, so runs are reproducible bit-for-bit.
using Rng = std::mt19937_64;

std::uint64_t splitmix64_next(std::uint64_t& state);

/// Child seed for an independent logical stream (lattice index, module tag, ...).
std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream);

Rng make_rng(std::uint64_t seed);

/// Uniform double in [0, 1) with 53 random bits.
inline double unit_uniform(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, n), n >= 1.
std::uint64_t uniform_below(Rng& g, std::uint64_t n);

/// Fisher-Yates shuffle written out explicitly (std::shuffle is not
/// guaranteed to produce the same permutation across standard libraries).
template <class T>
void deterministic_shuffle(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(g, i)]);
  }
}

}  // namespace latfact
