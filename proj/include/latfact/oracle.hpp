#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "latfact/lattice.hpp"
#include "latfact/numtheory.hpp"
#include "latfact/pbit.hpp"
#include "latfact/types.hpp"

namespace latfact {

struct SrHit {
  State state;
  BigInt u;
  BigInt v;
  BigInt distance_sq;
};

struct EnumerationReport {
  State best_state;
  BigInt best_distance_sq;
  std::vector<SrHit> sr_pairs;  // filled by enumerate_sr_pairs only
  std::uint64_t states_visited = 0;
  std::optional<int> weight_bound;
};

/// Exhaustive ground truth over the refinement neighborhood {0,1}^m (or the
/// states with popcount <= weight_bound). Ties break to the lexicographically
/// smallest state. Full enumeration refuses m > 26; pass a weight bound for
/// larger instances.
EnumerationReport enumerate_neighborhood(const RefinementProblem& problem,
                                         std::optional<int> weight_bound = std::nullopt,
                                         int workers = 1);

/// Same walk, additionally testing every visited lattice point for sr-pair
/// membership over base_M. The hit list is the census used as denominator in
/// recovery-fraction metrics.
EnumerationReport enumerate_sr_pairs(const PrimeLattice& lattice, const ReducedBasis& reduced,
                                     const BabaiResult& babai, const FactorBase& base_M,
                                     std::optional<int> weight_bound = std::nullopt,
                                     int workers = 1);

/// Exact closest distance (squared) in the coefficient box of +/- radius
/// around the Babai coefficients; reference point for the Babai ratio bound.
BigInt box_min_distance_sq(const ReducedBasis& reduced, const IntVec& target,
                           const IntVec& babai_coeffs, int radius);

/// CSV rows: state,distance_sq,is_sr_pair,u,v
void write_census_csv(std::ostream& os, const PrimeLattice& lattice, const ReducedBasis& reduced,
                      const BabaiResult& babai, const FactorBase& base_M,
                      std::optional<int> weight_bound = std::nullopt);

}  // namespace latfact
