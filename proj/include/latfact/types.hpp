#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace latfact {

namespace mp = boost::multiprecision;

// Plain value types (no expression templates) so they behave as Eigen scalars.
using BigInt = mp::number<mp::gmp_int, mp::et_off>;
using BigRat = mp::number<mp::gmp_rational, mp::et_off>;

using IntVec = Eigen::Matrix<BigInt, Eigen::Dynamic, 1>;
using IntMat = Eigen::Matrix<BigInt, Eigen::Dynamic, Eigen::Dynamic>;
using RatVec = Eigen::Matrix<BigRat, Eigen::Dynamic, 1>;
using RatMat = Eigen::Matrix<BigRat, Eigen::Dynamic, Eigen::Dynamic>;

/// Exponent / direction / coefficient vectors with machine-word entries.
using ExpVec = Eigen::VectorXi;

/// Binary state of a p-bit network (entries 0/1).
using State = std::vector<std::uint8_t>;

/// floor(a / b), b > 0, exact for any sign of a.
BigInt floor_div(const BigInt& a, const BigInt& b);

/// Nearest integer with halves rounded up: 1.5 -> 2, -1.5 -> -1, -0.5 -> 0.
BigInt round_nearest(const BigRat& q);

BigRat make_rat(const BigInt& num, const BigInt& den);

RatVec to_rat(const IntVec& v);
IntVec to_int_vec(const std::vector<long>& v);

BigInt sq_norm(const IntVec& v);
BigRat sq_norm(const RatVec& v);

/// Number of bits of |n|; bit_length(0) == 0.
std::size_t bit_length(const BigInt& n);

std::string to_decimal(const BigInt& n);

/// Parses a base-10 integer; throws std::invalid_argument on malformed input.
BigInt parse_decimal(const std::string& s);

/// Packs a binary state into an integer with s[0] as the most significant
/// bit, so numeric order equals lexicographic order on the state.
std::uint64_t state_key(const State& s);

std::string state_string(const State& s);

}  // namespace latfact
