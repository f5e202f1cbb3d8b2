#include "latfact/numtheory.hpp"

#include <boost/multiprecision/miller_rabin.hpp>

#include <cmath>
#include <stdexcept>

namespace latfact {

std::vector<std::uint64_t> first_primes(std::size_t m) {
  if (m == 0) throw std::invalid_argument("first_primes: m must be >= 1");
  // Rosser-style upper bound for the m-th prime, with slack for tiny m.
  double dm = static_cast<double>(m);
  std::size_t bound = 16;
  if (m >= 6) {
    bound = static_cast<std::size_t>(dm * (std::log(dm) + std::log(std::log(dm)))) + 16;
  }
  std::vector<std::uint8_t> composite;
  std::vector<std::uint64_t> primes;
  while (primes.size() < m) {
    composite.assign(bound + 1, 0);
    primes.clear();
    for (std::size_t i = 2; i <= bound; ++i) {
      if (composite[i]) continue;
      primes.push_back(i);
      if (primes.size() == m) break;
      for (std::size_t j = i * i; j <= bound; j += i) composite[j] = 1;
    }
    bound *= 2;
  }
  primes.resize(m);
  return primes;
}

namespace {

std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % n);
}

std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t n) {
  std::uint64_t r = 1 % n;
  a %= n;
  while (e) {
    if (e & 1) r = mulmod_u64(r, a, n);
    a = mulmod_u64(a, a, n);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This witness set decides primality for every n < 2^64.
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

bool is_probable_prime(const BigInt& n) {
  if (n < 2) return false;
  if (n <= BigInt(std::uint64_t(-1))) return is_prime_u64(n.convert_to<std::uint64_t>());
  Rng gen(0x1a7f ^ static_cast<std::uint64_t>(bit_length(n)));
  return mp::miller_rabin_test(n, 40, gen);
}

FactorBase FactorBase::first(std::size_t m) {
  FactorBase base;
  base.small = first_primes(m);
  base.primes.reserve(m);
  unsigned long prev = 1;
  for (std::uint64_t p : base.small) {
    if (p <= prev || !is_prime_u64(p))
      throw std::logic_error("FactorBase: invariant violation in prime generation");
    prev = static_cast<unsigned long>(p);
    base.primes.emplace_back(p);
  }
  if (m >= 1 && base.small[0] != 2) throw std::logic_error("FactorBase: first prime must be 2");
  return base;
}

std::optional<ExponentVector> smooth_factorize(const BigInt& x, const FactorBase& base) {
  if (x == 0) throw std::invalid_argument("smooth_factorize: x must be nonzero");
  ExponentVector ev;
  ev.sign_bit = x < 0 ? 1 : 0;
  ev.exps = ExpVec::Zero(static_cast<int>(base.size()));
  BigInt a = abs(x);
  for (std::size_t i = 0; i < base.size() && a != 1; ++i) {
    unsigned long p = base.small[i];
    int e = 0;
    while (mp::integer_modulus(a, p) == 0) {
      a /= p;
      ++e;
    }
    ev.exps[static_cast<int>(i)] = e;
  }
  if (a != 1) return std::nullopt;
  return ev;
}

BigInt exponent_vector_to_int(const ExponentVector& e, const FactorBase& base) {
  if (static_cast<std::size_t>(e.exps.size()) != base.size())
    throw std::invalid_argument("exponent_vector_to_int: length mismatch with base");
  BigInt r = 1;
  for (int i = 0; i < e.exps.size(); ++i) {
    int exp = e.exps[i];
    if (exp < 0)
      throw std::invalid_argument("exponent_vector_to_int: signed exponent vectors are ratios, not integers");
    if (exp > 0) r *= pow(base.primes[static_cast<std::size_t>(i)], static_cast<unsigned>(exp));
  }
  return e.sign_bit ? BigInt(-r) : r;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
  if (a == 0 && b == 0) throw std::invalid_argument("gcd(0, 0) is undefined");
  return mp::gcd(a, b);
}

BigInt random_prime(int bits, Rng& rng) {
  if (bits < 2) throw std::invalid_argument("random_prime: bits must be >= 2");
  while (true) {
    BigInt x = 0;
    int words = (bits + 63) / 64;
    for (int w = 0; w < words; ++w) x = (x << 64) | BigInt(rng());
    x >>= words * 64 - bits;
    mpz_setbit(x.backend().data(), static_cast<mp_bitcnt_t>(bits - 1));
    mpz_setbit(x.backend().data(), 0);
    if (is_probable_prime(x)) return x;
  }
}

BigInt random_semiprime(int bits, Rng& rng) {
  if (bits < 4) throw std::invalid_argument("random_semiprime: bits must be >= 4");
  int hi = (bits + 1) / 2;
  int lo = bits / 2;
  while (true) {
    BigInt p = random_prime(hi, rng);
    BigInt q = random_prime(lo, rng);
    if (p == q) continue;
    BigInt n = p * q;
    if (bit_length(n) == static_cast<std::size_t>(bits)) return n;
  }
}

bool is_perfect_power(const BigInt& n) {
  if (n < 4) return false;
  return mpz_perfect_power_p(n.backend().data()) != 0;
}

std::optional<BigInt> perfect_power_root(const BigInt& n) {
  if (!is_perfect_power(n)) return std::nullopt;
  std::size_t maxk = bit_length(n);
  for (std::size_t k = 2; k <= maxk; ++k) {
    BigInt root;
    if (mpz_root(root.backend().data(), n.backend().data(), static_cast<unsigned long>(k)) != 0) {
      // Exact k-th root; recurse in case the root is itself a power.
      auto deeper = perfect_power_root(root);
      return deeper ? deeper : std::optional<BigInt>(root);
    }
  }
  return std::nullopt;
}

}  // namespace latfact
