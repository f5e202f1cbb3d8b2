#include "latfact/algebra.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <set>
#include <stdexcept>

#include "latfact/parallel.hpp"

namespace latfact {

ExpVec ratio_vector(const SrPair& pair) {
  const int M = static_cast<int>(pair.e.exps.size());
  if (pair.e_prime.exps.size() != M)
    throw std::invalid_argument("ratio_vector: exponent vector length mismatch");
  ExpVec r(M + 1);
  r(0) = pair.e_prime.sign_bit - pair.e.sign_bit;
  for (int i = 0; i < M; ++i) r(i + 1) = pair.e_prime.exps(i) - pair.e.exps(i);
  return r;
}

GF2Matrix::GF2Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_bits_(rows, std::vector<std::uint64_t>((cols + 63) / 64, 0)) {}

GF2Matrix GF2Matrix::from_relations(const std::vector<SrPair>& relations, std::size_t M) {
  GF2Matrix m(M + 1, relations.size());
  for (std::size_t j = 0; j < relations.size(); ++j) {
    ExpVec r = ratio_vector(relations[j]);
    if (static_cast<std::size_t>(r.size()) != M + 1)
      throw std::invalid_argument("GF2Matrix: relation does not match base size");
    for (std::size_t i = 0; i <= M; ++i) {
      if (r(static_cast<int>(i)) % 2 != 0) m.set(i, j, true);
    }
  }
  return m;
}

void GF2Matrix::set(std::size_t r, std::size_t c, bool v) {
  auto& word = row_bits_.at(r)[c / 64];
  std::uint64_t mask = 1ull << (c % 64);
  if (v)
    word |= mask;
  else
    word &= ~mask;
}

bool GF2Matrix::get(std::size_t r, std::size_t c) const {
  return (row_bits_.at(r)[c / 64] >> (c % 64)) & 1u;
}

std::vector<std::uint8_t> GF2Matrix::multiply(const std::vector<std::uint8_t>& tau) const {
  if (tau.size() != cols_) throw std::invalid_argument("GF2Matrix::multiply: length mismatch");
  std::vector<std::uint64_t> packed((cols_ + 63) / 64, 0);
  for (std::size_t j = 0; j < cols_; ++j)
    if (tau[j]) packed[j / 64] |= 1ull << (j % 64);
  std::vector<std::uint8_t> out(rows_, 0);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < packed.size(); ++w) acc ^= row_bits_[r][w] & packed[w];
    out[r] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> nullspace_gf2(const GF2Matrix& matrix) {
  const std::size_t R = matrix.cols();
  const std::size_t rows = matrix.rows();
  if (R == 0) return {};

  // Work on the transpose: one row per relation, augmented with identity
  // tracking bits. Rows that eliminate to zero give nullspace elements.
  const std::size_t data_words = (rows + 63) / 64;
  const std::size_t track_words = (R + 63) / 64;
  std::vector<std::vector<std::uint64_t>> work(R,
                                               std::vector<std::uint64_t>(data_words + track_words, 0));
  for (std::size_t j = 0; j < R; ++j) {
    for (std::size_t i = 0; i < rows; ++i)
      if (matrix.get(i, j)) work[j][i / 64] |= 1ull << (i % 64);
    work[j][data_words + j / 64] |= 1ull << (j % 64);
  }

  std::size_t pivot = 0;
  for (std::size_t col = 0; col < rows && pivot < R; ++col) {
    std::size_t sel = pivot;
    while (sel < R && !((work[sel][col / 64] >> (col % 64)) & 1u)) ++sel;
    if (sel == R) continue;
    std::swap(work[sel], work[pivot]);
    for (std::size_t r = pivot + 1; r < R; ++r) {
      if ((work[r][col / 64] >> (col % 64)) & 1u) {
        for (std::size_t w = 0; w < work[r].size(); ++w) work[r][w] ^= work[pivot][w];
      }
    }
    ++pivot;
  }

  std::vector<std::vector<std::uint8_t>> basis;
  for (std::size_t r = pivot; r < R; ++r) {
    bool zero = true;
    for (std::size_t w = 0; w < data_words; ++w) {
      if (work[r][w] != 0) {
        zero = false;
        break;
      }
    }
    if (!zero) continue;
    std::vector<std::uint8_t> tau(R, 0);
    for (std::size_t j = 0; j < R; ++j)
      tau[j] = static_cast<std::uint8_t>((work[r][data_words + j / 64] >> (j % 64)) & 1u);
    basis.push_back(std::move(tau));
  }
  return basis;
}

CongruenceResult assemble_congruence(const std::vector<std::uint8_t>& tau,
                                     const std::vector<SrPair>& relations, const BigInt& N) {
  if (tau.size() != relations.size())
    throw std::invalid_argument("assemble_congruence: tau length mismatch");
  CongruenceResult res;
  res.tau = tau;
  if (relations.empty() || std::find(tau.begin(), tau.end(), 1) == tau.end()) {
    res.X = 1;
    res.Y = 1;
    return res;
  }

  const int M = static_cast<int>(relations.front().e.exps.size());
  std::vector<long long> sum_both(static_cast<std::size_t>(M) + 1, 0);  // e + e'
  std::vector<long long> sum_prime(static_cast<std::size_t>(M) + 1, 0); // e'
  for (std::size_t j = 0; j < relations.size(); ++j) {
    if (!tau[j]) continue;
    const SrPair& rel = relations[j];
    sum_both[0] += rel.e.sign_bit + rel.e_prime.sign_bit;
    sum_prime[0] += rel.e_prime.sign_bit;
    for (int i = 0; i < M; ++i) {
      sum_both[static_cast<std::size_t>(i) + 1] += rel.e.exps(i) + rel.e_prime.exps(i);
      sum_prime[static_cast<std::size_t>(i) + 1] += rel.e_prime.exps(i);
    }
  }

  FactorBase base = FactorBase::first(static_cast<std::size_t>(M));
  BigInt X = 1, Y = 1;
  for (int i = 0; i <= M; ++i) {
    long long sb = sum_both[static_cast<std::size_t>(i)];
    long long sp = sum_prime[static_cast<std::size_t>(i)];
    if (sb % 2 != 0)
      throw std::logic_error("assemble_congruence: odd summed exponent; tau is not a parity solution");
    long long half = sb / 2;
    if (i == 0) {
      // Sign element p_0 = -1: only its parity matters.
      if (half % 2 != 0) X = N - 1;
      if (sp % 2 != 0)
        throw std::logic_error("assemble_congruence: odd sign-row exponent in Y");
      continue;
    }
    const BigInt& p = base.primes[static_cast<std::size_t>(i) - 1];
    if (half > 0) X = (X * mp::powm(p % N, BigInt(half), N)) % N;
    if (sp > 0) Y = (Y * mp::powm(p % N, BigInt(sp), N)) % N;
  }
  res.X = X;
  res.Y = Y;
  if ((X * X - Y * Y) % N != 0)
    throw std::logic_error("assemble_congruence: X^2 != Y^2 (mod N)");
  res.factors = extract_factors(res, N);
  return res;
}

std::optional<std::pair<BigInt, BigInt>> extract_factors(const CongruenceResult& result,
                                                         const BigInt& N) {
  const BigInt& X = result.X;
  const BigInt& Y = result.Y;
  if ((X - Y) % N == 0 || (X + Y) % N == 0) return std::nullopt;
  BigInt g1 = gcd(abs(X - Y), N);
  BigInt g2 = gcd(X + Y, N);
  BigInt p = g1, q = g2;
  if (p * q != N) q = N / p;
  if (p > q) std::swap(p, q);
  if (p <= 1 || p * q != N) return std::nullopt;
  return std::make_pair(p, q);
}

namespace {

std::vector<std::vector<std::uint8_t>> tau_candidates(
    const std::vector<std::vector<std::uint8_t>>& basis, int cap, Rng& rng) {
  std::vector<std::vector<std::uint8_t>> out;
  std::set<std::vector<std::uint8_t>> seen;
  auto push = [&](std::vector<std::uint8_t> v) {
    if (static_cast<int>(out.size()) >= cap) return;
    if (std::find(v.begin(), v.end(), 1) == v.end()) return;
    if (seen.insert(v).second) out.push_back(std::move(v));
  };
  for (const auto& b : basis) push(b);
  for (std::size_t i = 0; i < basis.size() && static_cast<int>(out.size()) < cap; ++i) {
    for (std::size_t j = i + 1; j < basis.size() && static_cast<int>(out.size()) < cap; ++j) {
      std::vector<std::uint8_t> v = basis[i];
      for (std::size_t k = 0; k < v.size(); ++k) v[k] ^= basis[j][k];
      push(v);
    }
  }
  int guard = cap * 8;
  while (static_cast<int>(out.size()) < cap && guard-- > 0 && !basis.empty()) {
    std::vector<std::uint8_t> v(basis.front().size(), 0);
    bool nonzero = false;
    for (const auto& b : basis) {
      if (uniform_below(rng, 2) == 1) {
        nonzero = true;
        for (std::size_t k = 0; k < v.size(); ++k) v[k] ^= b[k];
      }
    }
    if (nonzero) push(std::move(v));
  }
  return out;
}

}  // namespace

FactorReport factor(const BigInt& N, const FactorParams& params, std::uint64_t seed) {
  auto start = std::chrono::steady_clock::now();
  FactorReport report;
  report.n = N;
  auto finish = [&](FactorStatus status, std::string detail) -> FactorReport& {
    report.status = status;
    report.detail = std::move(detail);
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  };

  if (N < 4) return finish(FactorStatus::invalid_too_small, "input must be a composite >= 15");
  if (mp::integer_modulus(N, 2ul) == 0) {
    report.factors = std::make_pair(BigInt(2), N / 2);
    return finish(FactorStatus::invalid_even, "input is even: factor 2");
  }
  if (is_probable_prime(N)) return finish(FactorStatus::invalid_prime, "input is prime");
  if (auto root = perfect_power_root(N)) {
    report.factors = std::make_pair(*root, N / *root);
    return finish(FactorStatus::invalid_perfect_power, "input is a perfect power");
  }
  for (unsigned long p : {3ul, 5ul, 7ul, 11ul, 13ul, 17ul, 19ul, 23ul, 29ul, 31ul}) {
    if (N > p && mp::integer_modulus(N, p) == 0) {
      BigInt bp(p), q = N / p;
      report.factors = std::make_pair(bp, q);
      return finish(FactorStatus::success, "small prime factor found by trial division screen");
    }
  }
  if (N < 15) return finish(FactorStatus::invalid_too_small, "input must be >= 15");

  CampaignParams cparams = resolve_campaign_params(N, params.campaign);
  cparams.workers = std::max(cparams.workers, params.workers);
  report.m = cparams.m;
  report.M = cparams.M;
  Rng tau_rng = make_rng(split_seed(seed, 2));

  auto retry_step_for = [&](int M) {
    return params.retry_step ? params.retry_step
                             : std::max<std::size_t>(4, (static_cast<std::size_t>(M) + 2) / 10);
  };

  auto campaign = std::make_unique<CollectionCampaign>(N, cparams, split_seed(seed, 1));
  std::size_t target = cparams.target_relations;
  std::uint64_t consumed_before = 0;  // lattices used by earlier escalation rounds
  std::size_t last_relation_count = 0;
  bool had_stalled_round = false;

  while (true) {
    bool reached = campaign->collect_until(target);
    CampaignOutcome snap = campaign->snapshot();
    report.relations_used = snap.relations.size();
    report.lattices_consumed = consumed_before + snap.lattices_consumed;
    report.collision_rate = snap.stats.collision_rate();
    report.campaign_stats = snap.stats;
    report.relations = snap.relations;

    // Run the linear-algebra phase on whatever was collected. M+2 relations
    // guarantee a nonempty nullspace, but dependencies usually appear much
    // earlier, so a stalled campaign can still succeed here.
    if (snap.relations.size() >= 2) {
      ++report.linear_algebra_rounds;
      GF2Matrix matrix =
          GF2Matrix::from_relations(snap.relations, static_cast<std::size_t>(cparams.M));
      auto basis = nullspace_gf2(matrix);
      auto candidates = tau_candidates(basis, params.tau_trial_cap, tau_rng);

      // Batched so tau trials can run on the worker pool; the first success
      // in candidate order wins regardless of scheduling.
      const std::size_t batch = std::max(1, params.workers);
      for (std::size_t lo = 0; lo < candidates.size(); lo += batch) {
        std::size_t hi = std::min(candidates.size(), lo + batch);
        auto results = parallel_map<CongruenceResult>(
            hi - lo, params.workers, [&](std::size_t i) {
              return assemble_congruence(candidates[lo + i], snap.relations, N);
            });
        for (std::size_t i = 0; i < results.size(); ++i) {
          ++report.tau_trials;
          if (results[i].factors) {
            report.factors = results[i].factors;
            return finish(FactorStatus::success, "nontrivial congruence of squares");
          }
        }
      }
    }

    bool stuck = false;
    if (!reached) {
      if (campaign->budget_exhausted()) {
        stuck = true;
      } else if (had_stalled_round && snap.relations.size() == last_relation_count) {
        stuck = true;
      } else {
        had_stalled_round = true;
      }
    } else {
      had_stalled_round = false;
    }

    if (stuck) {
      // The reachable relation universe at this smoothness bound is spent and
      // every congruence was trivial. Raising M strictly enlarges the
      // universe without touching the lattices, so retry with a wider base.
      if (report.bound_escalations >= params.max_bound_escalations)
        return finish(FactorStatus::budget_exhausted,
                      "no nontrivial congruence after exhausting the relation "
                      "universe at the maximum smoothness bound");
      ++report.bound_escalations;
      consumed_before += snap.lattices_consumed;
      CampaignParams raw = params.campaign;
      raw.M = cparams.M + std::max(8, cparams.M / 2);
      raw.target_relations = 0;  // re-derive M + 2
      raw.lattice_budget = params.campaign.lattice_budget;
      cparams = resolve_campaign_params(N, raw);
      cparams.workers = std::max(cparams.workers, params.workers);
      report.M = cparams.M;
      campaign = std::make_unique<CollectionCampaign>(
          N, cparams, split_seed(seed, 100 + static_cast<std::uint64_t>(report.bound_escalations)));
      target = cparams.target_relations;
      last_relation_count = 0;
      had_stalled_round = false;
      continue;
    }

    last_relation_count = snap.relations.size();
    target = std::max(target, snap.relations.size()) + retry_step_for(cparams.M);
  }
}

nlohmann::json report_to_json(const FactorReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n"] = to_decimal(report.n);
  switch (report.status) {
    case FactorStatus::success: j["status"] = "success"; break;
    case FactorStatus::invalid_input: j["status"] = "invalid_input"; break;
    case FactorStatus::invalid_even: j["status"] = "invalid_even"; break;
    case FactorStatus::invalid_prime: j["status"] = "invalid_prime"; break;
    case FactorStatus::invalid_perfect_power: j["status"] = "invalid_perfect_power"; break;
    case FactorStatus::invalid_too_small: j["status"] = "invalid_too_small"; break;
    case FactorStatus::budget_exhausted: j["status"] = "budget_exhausted"; break;
  }
  if (report.factors) {
    j["p"] = to_decimal(report.factors->first);
    j["q"] = to_decimal(report.factors->second);
  }
  j["detail"] = report.detail;
  j["relations_used"] = report.relations_used;
  j["lattices_consumed"] = report.lattices_consumed;
  j["collision_rate"] = report.collision_rate;
  j["tau_trials"] = report.tau_trials;
  j["linear_algebra_rounds"] = report.linear_algebra_rounds;
  j["bound_escalations"] = report.bound_escalations;
  j["elapsed_seconds"] = report.elapsed_seconds;
  j["m"] = report.m;
  j["M"] = report.M;
  j["campaign_stats"] = stats_to_json(report.campaign_stats);
  return j;
}

}  // namespace latfact
