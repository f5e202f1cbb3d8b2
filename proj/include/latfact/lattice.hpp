#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "latfact/rng.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// Rectangular prime-lattice basis for a semiprime n: rows 0..m-1 carry the
/// diagonal weights f, the last row carries round(10^c * ln p_j); the target
/// is (0,...,0, round(10^c * ln n)).
struct PrimeLattice {
  BigInt n;
  int m = 0;
  int c = 4;
  std::vector<int> f;  // permutation of the multiset {ceil(i/2) : i = 1..m}
  IntMat basis;        // (m+1) x m, columns are basis vectors
  IntVec target;       // length m+1
};

/// Exact rational Gram-Schmidt data of a set of integer basis vectors.
struct GramSchmidt {
  RatMat orthogonal;  // columns b~_i
  RatMat mu;          // mu(i,j) = <b_i, b~_j>/||b~_j||^2 for j < i
  RatVec sq_norms;    // ||b~_i||^2
};

struct ReducedBasis {
  IntMat vectors;    // (m+1) x m LLL-reduced columns
  GramSchmidt gso;   // of `vectors`
  IntMat transform;  // unimodular U with original * U == vectors
};

struct BabaiResult {
  IntVec b_op;  // lattice point approximating the target
  RatVec mu;    // Gram-Schmidt coefficient seen at each iteration, basis order
  IntVec roundings;   // c_i = round(mu_i); also b_op's coefficients: b_op = vectors * roundings
  ExpVec directions;  // k_i = sign(mu_i - c_i), 0 when mu_i is integral
};

/// round(10^c * ln x) for x >= 2, certified by an MPFR interval evaluation:
/// the precision is raised until both interval endpoints round identically.
BigInt scaled_log_round(const BigInt& x, int c);

/// Builds the prime lattice for N (odd, >= 15) with dimension m >= 2. The
/// diagonal permutation is drawn from rng; a fixed seed fixes the lattice.
PrimeLattice build_prime_lattice(const BigInt& N, int m, int c, Rng& rng);

/// Exact Gram-Schmidt; throws std::invalid_argument on dependent input.
GramSchmidt gram_schmidt(const IntMat& vectors);

/// LLL reduction with parameter delta in (1/4, 1). All arithmetic is exact
/// (integer lambda/d bookkeeping), so the result is deterministic.
ReducedBasis lll_reduce(const IntMat& basis, const BigRat& delta = BigRat(99, 100));
ReducedBasis lll_reduce(const PrimeLattice& lattice, const BigRat& delta = BigRat(99, 100));

/// Babai's nearest-plane walk on the reduced basis. Returns the lattice point
/// together with the per-vector Gram-Schmidt coefficients, roundings and the
/// leftover rounding directions k used by the refinement neighborhood.
BabaiResult babai_nearest_plane(const ReducedBasis& reduced, const RatVec& target);
BabaiResult babai_nearest_plane(const ReducedBasis& reduced, const IntVec& target);

struct PointNotInLattice : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Coefficients e with lattice.basis * e == point, recovered through the
/// diagonal rows and verified by exact re-multiplication of every row.
/// Throws PointNotInLattice on mismatch.
IntVec coefficients_of(const IntVec& point, const PrimeLattice& lattice);

/// b_op + sum z_i * k_i * d_i over the reduced basis vectors d_i.
IntVec neighborhood_point(const BabaiResult& babai, const ReducedBasis& reduced,
                          const State& z);

/// |det| of a square integer matrix (fraction-free Bareiss elimination).
BigInt determinant_abs(const IntMat& a);

nlohmann::json lattice_to_json(const PrimeLattice& lattice);
PrimeLattice lattice_from_json(const nlohmann::json& j);

}  // namespace latfact
