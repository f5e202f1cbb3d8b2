#include "latfact/sieve.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <thread>
#include <unordered_set>

#include "latfact/parallel.hpp"

namespace latfact {

RelationStats& RelationStats::operator+=(const RelationStats& o) {
  emissions += o.emissions;
  candidates_checked += o.candidates_checked;
  sr_submissions += o.sr_submissions;
  collisions += o.collisions;
  same_lattice_duplicates += o.same_lattice_duplicates;
  degenerate_skipped += o.degenerate_skipped;
  return *this;
}

double RelationStats::collision_rate() const {
  if (sr_submissions == 0) return 0.0;
  return static_cast<double>(collisions) / static_cast<double>(sr_submissions);
}

bool RelationSet::submit(const SrPair& pair) {
  std::lock_guard<std::mutex> lock(mtx_);
  ++stats_.sr_submissions;
  auto key = std::make_pair(pair.u, pair.v);
  auto [it, inserted] = rels_.emplace(key, pair);
  if (inserted) {
    sources_[key].insert(pair.lattice_id);
    return true;
  }
  auto& src = sources_[key];
  if (src.insert(pair.lattice_id).second)
    ++stats_.collisions;
  else
    ++stats_.same_lattice_duplicates;
  return false;
}

std::size_t RelationSet::size() const {
  std::lock_guard<std::mutex> lock(mtx_);
  return rels_.size();
}

std::vector<SrPair> RelationSet::relations() const {
  std::lock_guard<std::mutex> lock(mtx_);
  std::vector<SrPair> out;
  out.reserve(rels_.size());
  for (const auto& [key, pair] : rels_) out.push_back(pair);
  return out;
}

RelationStats RelationSet::stats() const {
  std::lock_guard<std::mutex> lock(mtx_);
  return stats_;
}

void RelationSet::add_stats(const RelationStats& s) {
  std::lock_guard<std::mutex> lock(mtx_);
  RelationStats merged = s;
  // Submission-level counters are tracked by submit(); only the sampling-side
  // counters are folded in here.
  merged.sr_submissions = 0;
  merged.collisions = 0;
  merged.same_lattice_duplicates = 0;
  stats_ += merged;
}

std::pair<BigInt, BigInt> state_to_uv(const State& z, const PrimeLattice& lattice,
                                      const ReducedBasis& reduced, const BabaiResult& babai) {
  IntVec point = neighborhood_point(babai, reduced, z);
  IntVec e = coefficients_of(point, lattice);
  auto primes = first_primes(static_cast<std::size_t>(lattice.m));
  BigInt u = 1, v = 1;
  for (int i = 0; i < lattice.m; ++i) {
    if (e(i) > 0)
      u *= pow(BigInt(primes[static_cast<std::size_t>(i)]), e(i).convert_to<unsigned>());
    else if (e(i) < 0)
      v *= pow(BigInt(primes[static_cast<std::size_t>(i)]), BigInt(-e(i)).convert_to<unsigned>());
  }
  return {u, v};
}

std::optional<SrPair> check_sr_pair(const BigInt& u, const BigInt& v, const BigInt& N,
                                    const FactorBase& base_M) {
  if (u < 1 || v < 1) throw std::invalid_argument("check_sr_pair: u, v must be >= 1");
  BigInt w = u - v * N;
  if (w == 0) return std::nullopt;  // degenerate: N would divide a smooth number
  auto eu = smooth_factorize(u, base_M);
  if (!eu) return std::nullopt;
  if (!smooth_factorize(v, base_M)) return std::nullopt;
  auto ew = smooth_factorize(w, base_M);
  if (!ew) return std::nullopt;
  SrPair pair;
  pair.u = u;
  pair.v = v;
  pair.e = std::move(*eu);
  pair.e_prime = std::move(*ew);
  return pair;
}

namespace {

struct Candidate {
  State z;
  std::uint64_t sweep = 0;
  std::uint64_t index = 0;
};

// Streaming candidate checker: the sampling loop enqueues distinct states
// without blocking; a small pool drains the queue concurrently. Results are
// folded in emission order afterwards, so the outcome is interleaving-free.
class CheckerPool {
 public:
  CheckerPool(int workers, std::function<std::optional<SrPair>(const Candidate&)> check)
      : check_(std::move(check)) {
    int n = std::max(1, workers);
    for (int i = 0; i < n; ++i) {
      threads_.emplace_back([this] { run(); });
    }
  }

  void enqueue(Candidate c) {
    {
      std::lock_guard<std::mutex> lock(mtx_);
      queue_.push_back(std::move(c));
    }
    cv_.notify_one();
  }

  std::vector<std::pair<std::uint64_t, std::optional<SrPair>>> finish() {
    {
      std::lock_guard<std::mutex> lock(mtx_);
      done_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
    std::sort(results_.begin(), results_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return std::move(results_);
  }

 private:
  void run() {
    while (true) {
      Candidate c;
      {
        std::unique_lock<std::mutex> lock(mtx_);
        cv_.wait(lock, [&] { return done_ || !queue_.empty(); });
        if (queue_.empty()) {
          if (done_) return;
          continue;
        }
        c = std::move(queue_.front());
        queue_.pop_front();
      }
      auto r = check_(c);
      std::lock_guard<std::mutex> lock(results_mtx_);
      results_.emplace_back(c.index, std::move(r));
    }
  }

  std::function<std::optional<SrPair>(const Candidate&)> check_;
  std::mutex mtx_;
  std::condition_variable cv_;
  std::deque<Candidate> queue_;
  bool done_ = false;
  std::mutex results_mtx_;
  std::vector<std::pair<std::uint64_t, std::optional<SrPair>>> results_;
  std::vector<std::thread> threads_;
};

}  // namespace

LatticeCollectionResult collect_from_lattice(const BigInt& N, int m, const FactorBase& base_M,
                                             int c, const EngineParams& params,
                                             std::uint64_t lattice_id, std::uint64_t seed) {
  if (m > 64) throw std::invalid_argument("collect_from_lattice: m > 64 unsupported");
  Rng rng = make_rng(split_seed(seed, 0));
  PrimeLattice lattice = build_prime_lattice(N, m, c, rng);
  ReducedBasis reduced = lll_reduce(lattice);
  BabaiResult babai = babai_nearest_plane(reduced, lattice.target);
  RefinementProblem problem = RefinementProblem::from(lattice, reduced, babai);

  LatticeCollectionResult result;
  result.lattice_id = lattice_id;
  result.m = m;

  std::atomic<std::uint64_t> degenerate{0};
  auto check = [&](const Candidate& cand) -> std::optional<SrPair> {
    IntVec point = neighborhood_point(babai, reduced, cand.z);
    IntVec e = coefficients_of(point, lattice);
    BigInt u = 1, v = 1;
    for (int i = 0; i < m; ++i) {
      if (e(i) > 0)
        u *= pow(base_M.primes[static_cast<std::size_t>(i)], e(i).convert_to<unsigned>());
      else if (e(i) < 0)
        v *= pow(base_M.primes[static_cast<std::size_t>(i)], BigInt(-e(i)).convert_to<unsigned>());
    }
    if (u == v * N) {
      degenerate.fetch_add(1, std::memory_order_relaxed);
      return std::nullopt;
    }
    auto pair = check_sr_pair(u, v, N, base_M);
    if (pair) {
      pair->lattice_id = lattice_id;
      pair->sweep_index = cand.sweep;
    }
    return pair;
  };

  const int sweeps = params.sweeps_per_m * m;
  std::unordered_set<std::uint64_t> seen;
  std::uint64_t next_index = 0;
  std::vector<std::pair<std::uint64_t, std::optional<SrPair>>> checked;

  if (params.priority_order) {
    // Gather candidates first, then test in ascending distance-to-target
    // order (stable on first-seen order for equal distances).
    std::vector<Candidate> candidates;
    auto stats = run_collection(
        problem, params.beta, sweeps,
        [&](const State& s, std::uint64_t sweep) {
          if (seen.insert(state_key(s)).second)
            candidates.push_back(Candidate{s, sweep, next_index++});
        },
        split_seed(seed, 1), params.order);
    result.stats.emissions = stats.emissions;
    std::vector<BigInt> cost(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) cost[i] = energy(problem, candidates[i].z);
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
    auto results = parallel_map<std::optional<SrPair>>(
        order.size(), std::max(1, params.checker_workers),
        [&](std::size_t i) { return check(candidates[order[i]]); });
    for (std::size_t i = 0; i < order.size(); ++i)
      checked.emplace_back(candidates[order[i]].index, results[i]);
    std::sort(checked.begin(), checked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  } else {
    CheckerPool pool(params.checker_workers, check);
    auto stats = run_collection(
        problem, params.beta, sweeps,
        [&](const State& s, std::uint64_t sweep) {
          if (seen.insert(state_key(s)).second)
            pool.enqueue(Candidate{s, sweep, next_index++});
        },
        split_seed(seed, 1), params.order);
    result.stats.emissions = stats.emissions;
    checked = pool.finish();
  }

  result.stats.candidates_checked = checked.size();
  result.stats.degenerate_skipped = degenerate.load();
  for (auto& [idx, pair] : checked) {
    if (pair) {
      ++result.stats.sr_submissions;
      result.pairs.push_back(std::move(*pair));
    }
  }
  return result;
}

CampaignParams resolve_campaign_params(const BigInt& N, CampaignParams p) {
  int bits = static_cast<int>(bit_length(N));
  if (p.m == 0) p.m = (bits + 2) / 3;
  if (p.m < 2) p.m = 2;
  if (p.M == 0) p.M = p.m * p.m;
  if (p.M < p.m)
    throw std::invalid_argument("campaign: smoothness bound M must be >= lattice dimension m");
  if (p.target_relations == 0) p.target_relations = static_cast<std::size_t>(p.M) + 2;
  if (p.lattice_budget == 0) p.lattice_budget = 200 * (static_cast<std::size_t>(p.M) + 2);
  if (p.workers <= 0) p.workers = 1;
  return p;
}

CollectionCampaign::CollectionCampaign(const BigInt& N, const CampaignParams& params,
                                       std::uint64_t seed)
    : n_(N),
      params_(resolve_campaign_params(N, params)),
      base_(FactorBase::first(static_cast<std::size_t>(params_.M))),
      seed_(seed) {}

bool CollectionCampaign::collect_until(std::size_t target) {
  idle_lattices_ = 0;
  while (set_.size() < target && consumed_ < params_.lattice_budget &&
         idle_lattices_ < params_.stall_lattices) {
    std::size_t wave = std::min<std::size_t>(static_cast<std::size_t>(params_.workers),
                                             params_.lattice_budget - consumed_);
    wave = std::max<std::size_t>(wave, 1);
    std::uint64_t first = consumed_;
    auto results = parallel_map<LatticeCollectionResult>(
        wave, params_.workers, [&](std::size_t i) {
          std::uint64_t idx = first + i;
          return collect_from_lattice(n_, params_.m, base_, params_.c, params_.engine, idx,
                                      split_seed(seed_, idx));
        });
    // Fold in lattice-index order so the outcome is worker-count independent.
    for (auto& res : results) {
      ++consumed_;
      set_.add_stats(res.stats);
      bool any_new = false;
      for (auto& p : res.pairs) any_new = set_.submit(p) || any_new;
      idle_lattices_ = any_new ? 0 : idle_lattices_ + 1;
      if (set_.size() >= target || idle_lattices_ >= params_.stall_lattices) break;
    }
  }
  return set_.size() >= target;
}

CampaignOutcome CollectionCampaign::snapshot() const {
  CampaignOutcome out;
  out.relations = set_.relations();
  out.stats = set_.stats();
  out.lattices_consumed = consumed_;
  out.complete = set_.size() >= params_.target_relations;
  out.m = params_.m;
  out.M = params_.M;
  return out;
}

CampaignOutcome run_collection_campaign(const BigInt& N, const CampaignParams& params,
                                        std::uint64_t seed) {
  CollectionCampaign campaign(N, params, seed);
  campaign.collect_until(campaign.params().target_relations);
  return campaign.snapshot();
}

namespace {

nlohmann::json exponent_vector_to_json(const ExponentVector& e) {
  nlohmann::json j;
  j["sign_bit"] = e.sign_bit;
  std::vector<int> exps(e.exps.data(), e.exps.data() + e.exps.size());
  j["exps"] = exps;
  return j;
}

}  // namespace

void write_relations_jsonl(std::ostream& os, const std::vector<SrPair>& relations) {
  for (const auto& r : relations) {
    nlohmann::json j;
    j["u"] = to_decimal(r.u);
    j["v"] = to_decimal(r.v);
    j["e"] = exponent_vector_to_json(r.e);
    j["e_prime"] = exponent_vector_to_json(r.e_prime);
    j["lattice_id"] = r.lattice_id;
    j["sweep_index"] = r.sweep_index;
    os << j.dump() << '\n';
  }
}

nlohmann::json stats_to_json(const RelationStats& stats) {
  nlohmann::json j;
  j["emissions"] = stats.emissions;
  j["candidates_checked"] = stats.candidates_checked;
  j["sr_submissions"] = stats.sr_submissions;
  j["collisions"] = stats.collisions;
  j["same_lattice_duplicates"] = stats.same_lattice_duplicates;
  j["degenerate_skipped"] = stats.degenerate_skipped;
  j["collision_rate"] = stats.collision_rate();
  return j;
}

}  // namespace latfact
