#include "latfact/rng.hpp"

namespace latfact {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t s = root ^ (0xA5A5A5A55A5A5A5Aull + stream * 0x9E3779B97F4A7C15ull);
  splitmix64_next(s);
  return splitmix64_next(s);
}

Rng make_rng(std::uint64_t seed) { return Rng(seed); }

std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

}  // namespace latfact
