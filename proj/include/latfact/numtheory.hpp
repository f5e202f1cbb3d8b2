#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "latfact/rng.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// Ordered factoring basis p_1..p_M. The sign element p_0 = -1 is implicit:
/// it is carried by ExponentVector::sign_bit rather than stored here.
struct FactorBase {
  std::vector<BigInt> primes;
  std::vector<unsigned long> small;  // same primes as machine words

  FactorBase() = default;
  static FactorBase first(std::size_t m);

  std::size_t size() const { return primes.size(); }
  const BigInt& prime(std::size_t i) const { return primes.at(i); }
};

/// (-1)^sign_bit * prod p_i^{exps_i}. Non-negative exps represent a smooth
/// factorization; signed entries appear only in sr-pair ratio vectors.
struct ExponentVector {
  int sign_bit = 0;
  ExpVec exps;
};

/// First m primes as machine words (sieve of Eratosthenes).
std::vector<std::uint64_t> first_primes(std::size_t m);

/// Deterministic Miller-Rabin, exact for all n < 2^64.
bool is_prime_u64(std::uint64_t n);

/// Primality for arbitrary size: exact below 2^64, Miller-Rabin with 40
/// deterministic pseudo-random witnesses above.
bool is_probable_prime(const BigInt& n);

/// Exponent vector of x over the base iff |x| is smooth; absent otherwise.
/// x == 0 is invalid input.
std::optional<ExponentVector> smooth_factorize(const BigInt& x, const FactorBase& base);

/// Exact inverse of smooth_factorize. Rejects signed exponent vectors.
BigInt exponent_vector_to_int(const ExponentVector& e, const FactorBase& base);

/// gcd(a, b) >= 0; rejects a == b == 0.
BigInt gcd(const BigInt& a, const BigInt& b);

/// Uniform random prime with exactly `bits` bits (bits >= 2).
BigInt random_prime(int bits, Rng& rng);

/// N = p*q with p != q primes of about bits/2 bits, resampled until
/// bit_length(N) == bits.
BigInt random_semiprime(int bits, Rng& rng);

/// True iff n == b^k for some k >= 2.
bool is_perfect_power(const BigInt& n);

/// Smallest prime root b with n == b^k, for perfect-power diagnostics.
std::optional<BigInt> perfect_power_root(const BigInt& n);

}  // namespace latfact
