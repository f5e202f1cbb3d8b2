#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include <json.hpp>

#include "latfact/lattice.hpp"
#include "latfact/numtheory.hpp"
#include "latfact/pbit.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// A smooth relation pair: u, v and u - vN all factor over the base.
struct SrPair {
  BigInt u;
  BigInt v;
  ExponentVector e;        // of u, over the full base of M primes
  ExponentVector e_prime;  // of u - vN, sign-aware
  std::uint64_t lattice_id = 0;
  std::uint64_t sweep_index = 0;  // sweep of first discovery
};

struct RelationStats {
  std::uint64_t emissions = 0;           // raw p-bit state emissions
  std::uint64_t candidates_checked = 0;  // distinct states smoothness-tested
  std::uint64_t sr_submissions = 0;      // sr-pairs found, duplicates included
  std::uint64_t collisions = 0;          // same (u,v) from a different lattice
  std::uint64_t same_lattice_duplicates = 0;
  std::uint64_t degenerate_skipped = 0;  // u - vN == 0

  RelationStats& operator+=(const RelationStats& o);
  double collision_rate() const;
};

/// Deduplicated relations keyed by (u, v). Thread-safe submission; the final
/// content is a pure function of the submission sequence in order.
class RelationSet {
 public:
  /// Returns true when (u, v) was new. Re-submissions bump the collision or
  /// same-lattice-duplicate counter depending on the source lattice.
  bool submit(const SrPair& pair);

  std::size_t size() const;
  std::vector<SrPair> relations() const;  // ordered by (u, v)
  RelationStats stats() const;
  void add_stats(const RelationStats& s);

 private:
  mutable std::mutex mtx_;
  std::map<std::pair<BigInt, BigInt>, SrPair> rels_;
  std::map<std::pair<BigInt, BigInt>, std::set<std::uint64_t>> sources_;
  RelationStats stats_;
};

/// Lattice point of state z mapped to (u, v): positive coefficients feed u,
/// negative ones feed v.
std::pair<BigInt, BigInt> state_to_uv(const State& z, const PrimeLattice& lattice,
                                      const ReducedBasis& reduced, const BabaiResult& babai);

/// Full sr-pair test for a candidate (u, v): u, v and u - vN must all factor
/// over base_M. u - vN == 0 is degenerate and reported as absent.
std::optional<SrPair> check_sr_pair(const BigInt& u, const BigInt& v, const BigInt& N,
                                    const FactorBase& base_M);

struct EngineParams {
  double beta = 0.66;
  int sweeps_per_m = 20;  // collection budget: sweeps = sweeps_per_m * m
  double beta_start = 0.05;  // linear schedule used by refinement mode
  double beta_end = 5.0;
  UpdateOrder order = UpdateOrder::sweep;
  bool priority_order = false;  // check candidates in ascending distance order
  int checker_workers = 1;      // smoothness-check pool size
};

struct LatticeCollectionResult {
  std::vector<SrPair> pairs;  // discovery order, deduplicated per lattice state
  RelationStats stats;
  std::uint64_t lattice_id = 0;
  int m = 0;
};

/// One full collection pass: build lattice -> LLL -> Babai -> p-bit
/// exploration with every distinct emitted state checked exactly once.
LatticeCollectionResult collect_from_lattice(const BigInt& N, int m, const FactorBase& base_M,
                                             int c, const EngineParams& params,
                                             std::uint64_t lattice_id, std::uint64_t seed);

struct CampaignParams {
  int m = 0;                      // 0 -> ceil(bits/3)
  int M = 0;                      // 0 -> m^2
  int c = 4;
  std::size_t target_relations = 0;  // 0 -> M + 2
  std::size_t lattice_budget = 0;    // 0 -> 200 * (M + 2)
  std::size_t stall_lattices = 400;  // declare a stall after this many lattices
                                     // without a new relation
  EngineParams engine;
  int workers = 1;
};

/// Resolves the defaulted (0) fields of params for a given N.
CampaignParams resolve_campaign_params(const BigInt& N, CampaignParams params);

struct CampaignOutcome {
  std::vector<SrPair> relations;  // ordered by (u, v)
  RelationStats stats;
  std::uint64_t lattices_consumed = 0;
  bool complete = false;
  int m = 0;
  int M = 0;
};

/// Accumulates relations across fresh random lattices until the target count
/// or the lattice budget is reached. Deterministic for a fixed seed and
/// independent of the worker count.
class CollectionCampaign {
 public:
  CollectionCampaign(const BigInt& N, const CampaignParams& params, std::uint64_t seed);

  /// Extends collection until at least `target` relations are present.
  /// Returns false when the lattice budget ran out or collection stalled
  /// (params.stall_lattices consecutive lattices added nothing new) first.
  bool collect_until(std::size_t target);

  CampaignOutcome snapshot() const;
  const CampaignParams& params() const { return params_; }
  std::uint64_t lattices_consumed() const { return consumed_; }
  bool budget_exhausted() const { return consumed_ >= params_.lattice_budget; }

 private:
  BigInt n_;
  CampaignParams params_;
  FactorBase base_;
  std::uint64_t seed_;
  std::uint64_t consumed_ = 0;
  std::uint64_t idle_lattices_ = 0;  // consecutive lattices with no new relation
  RelationSet set_;
};

CampaignOutcome run_collection_campaign(const BigInt& N, const CampaignParams& params,
                                        std::uint64_t seed);

/// One JSON object per relation, newline separated.
void write_relations_jsonl(std::ostream& os, const std::vector<SrPair>& relations);
nlohmann::json stats_to_json(const RelationStats& stats);

}  // namespace latfact
