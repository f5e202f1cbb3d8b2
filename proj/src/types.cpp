#include "latfact/types.hpp"

#include <stdexcept>

namespace latfact {

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q;
  mpz_fdiv_q(q.backend().data(), a.backend().data(), b.backend().data());
  return q;
}

BigInt round_nearest(const BigRat& q) {
  // floor(q + 1/2) = floor((2n + d) / 2d); gmp keeps d > 0 canonical.
  BigInt n = numerator(q);
  BigInt d = denominator(q);
  return floor_div(2 * n + d, 2 * d);
}

BigRat make_rat(const BigInt& num, const BigInt& den) {
  BigRat r(num);
  r /= BigRat(den);
  return r;
}

RatVec to_rat(const IntVec& v) {
  RatVec r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = BigRat(v(i));
  return r;
}

IntVec to_int_vec(const std::vector<long>& v) {
  IntVec r(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<Eigen::Index>(i)) = v[i];
  return r;
}

BigInt sq_norm(const IntVec& v) { return v.dot(v); }
BigRat sq_norm(const RatVec& v) { return v.dot(v); }

std::size_t bit_length(const BigInt& n) {
  if (n == 0) return 0;
  return mpz_sizeinbase(n.backend().data(), 2);
}

std::string to_decimal(const BigInt& n) { return n.str(); }

BigInt parse_decimal(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty integer literal");
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (start == s.size()) throw std::invalid_argument("malformed integer literal: " + s);
  for (std::size_t i = start; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9')
      throw std::invalid_argument("malformed integer literal: " + s);
  }
  return BigInt(s);
}

std::uint64_t state_key(const State& s) {
  std::uint64_t key = 0;
  for (std::uint8_t b : s) key = (key << 1) | (b & 1u);
  return key;
}

std::string state_string(const State& s) {
  std::string out(s.size(), '0');
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) out[i] = '1';
  return out;
}

}  // namespace latfact
