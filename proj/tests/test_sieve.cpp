#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "latfact/oracle.hpp"
#include "latfact/sieve.hpp"

using namespace latfact;

namespace {

struct Bundle {
  PrimeLattice lattice;
  ReducedBasis reduced;
  BabaiResult babai;
};

Bundle bundle_for(const BigInt& n, int m, std::uint64_t seed) {
  Bundle b;
  Rng rng = make_rng(seed);
  b.lattice = build_prime_lattice(n, m, 4, rng);
  b.reduced = lll_reduce(b.lattice);
  b.babai = babai_nearest_plane(b.reduced, b.lattice.target);
  return b;
}

}  // namespace

TEST_CASE("state_to_uv splits coefficients by sign") {
  Rng rng = make_rng(909);
  BigInt n = random_semiprime(20, rng);
  auto b = bundle_for(n, 7, 11);
  auto primes = first_primes(7);
  for (std::uint64_t mask = 0; mask < 32; ++mask) {
    State z(7, 0);
    for (int i = 0; i < 5; ++i) z[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    auto [u, v] = state_to_uv(z, b.lattice, b.reduced, b.babai);
    IntVec e = coefficients_of(neighborhood_point(b.babai, b.reduced, z), b.lattice);
    BigInt eu = 1, ev = 1;
    for (int i = 0; i < 7; ++i) {
      if (e(i) > 0) eu *= pow(BigInt(primes[static_cast<std::size_t>(i)]), e(i).convert_to<unsigned>());
      if (e(i) < 0) ev *= pow(BigInt(primes[static_cast<std::size_t>(i)]), BigInt(-e(i)).convert_to<unsigned>());
    }
    CHECK(u == eu);
    CHECK(v == ev);
    CHECK(gcd(u, v) == 1);  // each prime feeds exactly one side
  }
}

TEST_CASE("check_sr_pair accepts the N=77 hand examples") {
  BigInt N(77);
  FactorBase base = FactorBase::first(21);  // primes up to 73

  auto p80 = check_sr_pair(BigInt(80), BigInt(1), N, base);
  REQUIRE(p80.has_value());
  CHECK(p80->e.sign_bit == 0);
  CHECK(p80->e.exps(0) == 4);  // 80 = 2^4 * 5
  CHECK(p80->e.exps(2) == 1);
  CHECK(p80->e_prime.sign_bit == 0);  // 80 - 77 = 3
  CHECK(p80->e_prime.exps(1) == 1);

  auto p2 = check_sr_pair(BigInt(2), BigInt(1), N, base);
  REQUIRE(p2.has_value());
  CHECK(p2->e_prime.sign_bit == 1);  // 2 - 77 = -75 = -(3 * 5^2)
  CHECK(p2->e_prime.exps(1) == 1);
  CHECK(p2->e_prime.exps(2) == 2);

  CHECK_FALSE(check_sr_pair(BigInt(79), BigInt(1), N, base).has_value());  // 79 prime > 73
  CHECK_FALSE(check_sr_pair(N, BigInt(1), N, base).has_value());           // degenerate u - vN = 0
  CHECK_THROWS_AS(check_sr_pair(BigInt(0), BigInt(1), N, base), std::invalid_argument);
}

TEST_CASE("sr-pairs reconstruct exactly from their exponent vectors") {
  Rng rng = make_rng(123);
  BigInt n = random_semiprime(24, rng);
  FactorBase base = FactorBase::first(64);
  auto b = bundle_for(n, 8, 5);
  auto census = enumerate_sr_pairs(b.lattice, b.reduced, b.babai, base);
  int verified = 0;
  for (const auto& hit : census.sr_pairs) {
    auto pair = check_sr_pair(hit.u, hit.v, n, base);
    REQUIRE(pair.has_value());
    CHECK(exponent_vector_to_int(pair->e, base) == pair->u);
    CHECK(exponent_vector_to_int(pair->e_prime, base) == pair->u - pair->v * n);
    ++verified;
  }
  CHECK(verified == static_cast<int>(census.sr_pairs.size()));
}

TEST_CASE("RelationSet dedup accounting identity") {
  RelationSet set;
  auto mk = [](int u, int v, std::uint64_t lattice) {
    SrPair p;
    p.u = u;
    p.v = v;
    p.e.exps = ExpVec::Zero(4);
    p.e_prime.exps = ExpVec::Zero(4);
    p.lattice_id = lattice;
    return p;
  };
  CHECK(set.submit(mk(10, 1, 0)));
  CHECK_FALSE(set.submit(mk(10, 1, 0)));  // same lattice duplicate
  CHECK_FALSE(set.submit(mk(10, 1, 1)));  // collision
  CHECK_FALSE(set.submit(mk(10, 1, 1)));  // duplicate within lattice 1
  CHECK(set.submit(mk(12, 1, 1)));
  auto st = set.stats();
  CHECK(set.size() == 2);
  CHECK(st.sr_submissions == 5);
  CHECK(st.collisions == 1);
  CHECK(st.same_lattice_duplicates == 2);
  CHECK(set.size() + st.collisions + st.same_lattice_duplicates == st.sr_submissions);
}

TEST_CASE("collection results are a subset of the oracle census") {
  Rng rng = make_rng(321);
  for (std::uint64_t s = 1; s <= 4; ++s) {
    BigInt n = random_semiprime(27, rng);
    FactorBase base = FactorBase::first(81);
    EngineParams ep;
    auto res = collect_from_lattice(n, 9, base, 4, ep, 7, s);
    auto b = bundle_for(n, 9, split_seed(s, 0));
    auto census = enumerate_sr_pairs(b.lattice, b.reduced, b.babai, base);
    std::set<std::pair<BigInt, BigInt>> census_set;
    for (const auto& h : census.sr_pairs) census_set.insert({h.u, h.v});
    for (const auto& p : res.pairs) {
      CHECK(census_set.count({p.u, p.v}) == 1);
    }
    CHECK(res.stats.emissions == static_cast<std::uint64_t>(20 * 9 * 9));
  }
}

TEST_CASE("checker pool worker count does not change the outcome") {
  Rng rng = make_rng(555);
  BigInt n = random_semiprime(26, rng);
  FactorBase base = FactorBase::first(81);
  EngineParams one;
  one.checker_workers = 1;
  EngineParams four;
  four.checker_workers = 4;
  auto a = collect_from_lattice(n, 9, base, 4, one, 3, 99);
  auto b = collect_from_lattice(n, 9, base, 4, four, 3, 99);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].u == b.pairs[i].u);
    CHECK(a.pairs[i].v == b.pairs[i].v);
    CHECK(a.pairs[i].sweep_index == b.pairs[i].sweep_index);
  }
  CHECK(a.stats.candidates_checked == b.stats.candidates_checked);
}

TEST_CASE("priority ordering finds the same relation set") {
  Rng rng = make_rng(777);
  BigInt n = random_semiprime(28, rng);
  FactorBase base = FactorBase::first(100);
  EngineParams plain;
  EngineParams prio;
  prio.priority_order = true;
  auto a = collect_from_lattice(n, 10, base, 4, plain, 1, 42);
  auto b = collect_from_lattice(n, 10, base, 4, prio, 1, 42);
  std::set<std::pair<BigInt, BigInt>> sa, sb;
  for (auto& p : a.pairs) sa.insert({p.u, p.v});
  for (auto& p : b.pairs) sb.insert({p.u, p.v});
  CHECK(sa == sb);
}

TEST_CASE("campaign reaches M+2 relations on a 30-bit semiprime") {
  Rng rng = make_rng(30303);
  BigInt n = random_semiprime(30, rng);
  CampaignParams params;  // defaults: m=10, M=100, target 102
  auto out = run_collection_campaign(n, params, 9001);
  CHECK(out.complete);
  CHECK(out.m == 10);
  CHECK(out.M == 100);
  CHECK(out.relations.size() >= 102);
  CHECK(out.lattices_consumed >= 1);
  auto st = out.stats;
  CHECK(out.relations.size() + st.collisions + st.same_lattice_duplicates == st.sr_submissions);
  // Soundness: every relation re-verifies from scratch.
  FactorBase base = FactorBase::first(100);
  for (const auto& r : out.relations) {
    auto again = check_sr_pair(r.u, r.v, n, base);
    REQUIRE(again.has_value());
    CHECK(again->e.exps == r.e.exps);
    CHECK(again->e_prime.exps == r.e_prime.exps);
    CHECK(again->e_prime.sign_bit == r.e_prime.sign_bit);
  }
}

TEST_CASE("campaign is worker-count independent") {
  Rng rng = make_rng(60606);
  BigInt n = random_semiprime(24, rng);
  CampaignParams w1;
  w1.workers = 1;
  CampaignParams w3;
  w3.workers = 3;
  auto a = run_collection_campaign(n, w1, 77);
  auto b = run_collection_campaign(n, w3, 77);
  CHECK(a.lattices_consumed == b.lattices_consumed);
  REQUIRE(a.relations.size() == b.relations.size());
  for (std::size_t i = 0; i < a.relations.size(); ++i) {
    CHECK(a.relations[i].u == b.relations[i].u);
    CHECK(a.relations[i].v == b.relations[i].v);
    CHECK(a.relations[i].lattice_id == b.relations[i].lattice_id);
  }
  CHECK(a.stats.sr_submissions == b.stats.sr_submissions);
  CHECK(a.stats.collisions == b.stats.collisions);
}

TEST_CASE("relations serialize to JSONL") {
  Rng rng = make_rng(404040);
  BigInt n = random_semiprime(20, rng);
  CampaignParams params;
  params.target_relations = 5;
  auto out = run_collection_campaign(n, params, 5);
  REQUIRE(out.relations.size() >= 5);
  std::ostringstream os;
  write_relations_jsonl(os, out.relations);
  std::istringstream is(os.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("u"));
    CHECK(j.contains("v"));
    CHECK(j.contains("lattice_id"));
    ++rows;
  }
  CHECK(rows == out.relations.size());
  auto stats_json = stats_to_json(out.stats);
  CHECK(stats_json.contains("collision_rate"));
}

TEST_CASE("resolve_campaign_params applies the documented defaults") {
  Rng rng = make_rng(1);
  BigInt n = random_semiprime(30, rng);
  CampaignParams p;
  auto r = resolve_campaign_params(n, p);
  CHECK(r.m == 10);
  CHECK(r.M == 100);
  CHECK(r.target_relations == 102);
  CHECK(r.lattice_budget == 200 * 102);
  CampaignParams bad;
  bad.m = 10;
  bad.M = 5;
  CHECK_THROWS_AS(resolve_campaign_params(n, bad), std::invalid_argument);
}
