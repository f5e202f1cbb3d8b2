#include "latfact/oracle.hpp"

#include <bit>
#include <set>
#include <stdexcept>

#include "latfact/parallel.hpp"

namespace latfact {

namespace {

constexpr int kFullEnumerationCap = 26;

// Visits states via a binary-reflected Gray walk (full neighborhood) or a
// bounded-weight DFS, maintaining the residual and squared distance
// incrementally. visit(z, dist) runs for every visited state.
template <class Scalar, class Visit>
void walk_states(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& w,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& base,
                 std::optional<int> weight_bound, Visit&& visit) {
  const int m = static_cast<int>(w.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = base;
  Scalar dist = r.dot(r);
  State z(static_cast<std::size_t>(m), 0);

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wnorm2(m);
  for (int i = 0; i < m; ++i) wnorm2(i) = w.col(i).dot(w.col(i));

  auto flip = [&](int j) {
    Scalar d2 = 2 * w.col(j).dot(r);
    if (z[static_cast<std::size_t>(j)]) {
      r += w.col(j);
      dist += d2 + wnorm2(j);
      z[static_cast<std::size_t>(j)] = 0;
    } else {
      r -= w.col(j);
      dist += wnorm2(j) - d2;
      z[static_cast<std::size_t>(j)] = 1;
    }
  };

  if (!weight_bound) {
    visit(z, dist);
    const std::uint64_t total = 1ull << m;
    for (std::uint64_t t = 1; t < total; ++t) {
      flip(std::countr_zero(t));
      visit(z, dist);
    }
    return;
  }

  auto dfs = [&](auto&& self, int start, int remaining) -> void {
    visit(z, dist);
    if (remaining == 0) return;
    for (int j = start; j < m; ++j) {
      flip(j);
      self(self, j + 1, remaining - 1);
      flip(j);
    }
  };
  dfs(dfs, 0, std::max(0, *weight_bound));
}

bool fits_int64_enum(const RefinementProblem& problem) {
  const BigInt limit = BigInt(1) << 62;
  BigInt coord = 0, max_w = 0;
  for (int r = 0; r < problem.ambient_dim(); ++r) {
    BigInt row = abs(problem.target(r) - problem.b_op(r));
    for (int i = 0; i < problem.m(); ++i) {
      row += abs(problem.basis_vectors(r, i));
      max_w = std::max(max_w, abs(problem.basis_vectors(r, i)));
    }
    coord = std::max(coord, row);
  }
  BigInt dot = BigInt(problem.ambient_dim()) * coord * std::max<BigInt>(coord, max_w);
  return 4 * dot < limit;
}

template <class Scalar>
void problem_arrays(const RefinementProblem& problem,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& w,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& base) {
  const int dim = problem.ambient_dim();
  const int m = problem.m();
  w.setZero(dim, m);
  base.resize(dim);
  for (int r = 0; r < dim; ++r) {
    BigInt v = problem.target(r) - problem.b_op(r);
    if constexpr (std::is_same_v<Scalar, BigInt>)
      base(r) = v;
    else
      base(r) = v.convert_to<Scalar>();
    for (int i = 0; i < m; ++i) {
      int k = problem.directions(i);
      if (k == 0) continue;
      BigInt wi = k == 1 ? problem.basis_vectors(r, i) : BigInt(-problem.basis_vectors(r, i));
      if constexpr (std::is_same_v<Scalar, BigInt>)
        w(r, i) = wi;
      else
        w(r, i) = wi.convert_to<Scalar>();
    }
  }
}

void check_enum_precondition(int m, std::optional<int> weight_bound) {
  if (!weight_bound && m > kFullEnumerationCap)
    throw std::invalid_argument(
        "enumerate: full enumeration refused for m > 26; set a weight_bound");
}

template <class Scalar>
EnumerationReport enumerate_impl(const RefinementProblem& problem,
                                 std::optional<int> weight_bound) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> base;
  problem_arrays<Scalar>(problem, w, base);

  EnumerationReport rep;
  rep.weight_bound = weight_bound;
  bool first = true;
  Scalar best{};
  std::uint64_t best_key = 0;
  walk_states<Scalar>(w, base, weight_bound, [&](const State& z, const Scalar& dist) {
    ++rep.states_visited;
    std::uint64_t key = state_key(z);
    if (first || dist < best || (dist == best && key < best_key)) {
      first = false;
      best = dist;
      best_key = key;
      rep.best_state = z;
    }
  });
  rep.best_distance_sq = BigInt(best);
  return rep;
}

// Walks every state and derives the lattice point's (u, v) through the
// incrementally maintained coefficient vector.
template <class Visit>
void census_walk(const PrimeLattice& lattice, const ReducedBasis& reduced,
                 const BabaiResult& babai, const FactorBase& base_M,
                 std::optional<int> weight_bound, Visit&& visit) {
  RefinementProblem problem = RefinementProblem::from(lattice, reduced, babai);
  IntMat k_ucols = IntMat::Zero(lattice.m, lattice.m);
  for (int i = 0; i < lattice.m; ++i) {
    int k = babai.directions(i);
    if (k == 1)
      k_ucols.col(i) = reduced.transform.col(i);
    else if (k == -1)
      k_ucols.col(i) = -reduced.transform.col(i);
  }
  IntVec e = coefficients_of(babai.b_op, lattice);
  State prev(static_cast<std::size_t>(lattice.m), 0);

  IntMat w;
  IntVec base;
  problem_arrays<BigInt>(problem, w, base);
  walk_states<BigInt>(w, base, weight_bound, [&](const State& z, const BigInt& dist) {
    for (int i = 0; i < lattice.m; ++i) {
      std::uint8_t zi = z[static_cast<std::size_t>(i)];
      if (zi == prev[static_cast<std::size_t>(i)]) continue;
      if (zi)
        e += k_ucols.col(i);
      else
        e -= k_ucols.col(i);
      prev[static_cast<std::size_t>(i)] = zi;
    }
    BigInt u = 1, v = 1;
    for (int i = 0; i < lattice.m; ++i) {
      if (e(i) > 0)
        u *= pow(base_M.primes[static_cast<std::size_t>(i)], e(i).convert_to<unsigned>());
      else if (e(i) < 0)
        v *= pow(base_M.primes[static_cast<std::size_t>(i)], BigInt(-e(i)).convert_to<unsigned>());
    }
    BigInt diff = u - v * lattice.n;
    bool is_sr = diff != 0 && smooth_factorize(diff, base_M).has_value();
    visit(z, dist, u, v, is_sr);
  });
}

}  // namespace

namespace {

// Full-enumeration partition: worker w walks the Gray sequence over
// [lo, hi), seeding state, residual and distance from scratch at lo. The
// per-chunk minima merge associatively, so the result is order-independent.
template <class Scalar>
EnumerationReport enumerate_partitioned(const RefinementProblem& problem, int workers) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> base;
  problem_arrays<Scalar>(problem, w, base);
  const int m = problem.m();
  const std::uint64_t total = 1ull << m;
  const std::size_t chunks = std::min<std::uint64_t>(static_cast<std::uint64_t>(workers) * 4, total);

  struct Partial {
    bool any = false;
    Scalar best{};
    std::uint64_t best_key = 0;
    State best_state;
    std::uint64_t visited = 0;
  };
  std::vector<Partial> parts(chunks);

  parallel_for(chunks, workers, [&](std::size_t chunk) {
    std::uint64_t lo = total * chunk / chunks;
    std::uint64_t hi = total * (chunk + 1) / chunks;
    if (lo >= hi) return;
    std::uint64_t gray = lo ^ (lo >> 1);
    State z(static_cast<std::size_t>(m), 0);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = base;
    for (int j = 0; j < m; ++j) {
      if ((gray >> j) & 1) {
        z[static_cast<std::size_t>(j)] = 1;
        r -= w.col(j);
      }
    }
    Scalar dist = r.dot(r);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wnorm2(m);
    for (int i = 0; i < m; ++i) wnorm2(i) = w.col(i).dot(w.col(i));

    Partial& part = parts[chunk];
    auto visit = [&] {
      ++part.visited;
      std::uint64_t key = state_key(z);
      if (!part.any || dist < part.best || (dist == part.best && key < part.best_key)) {
        part.any = true;
        part.best = dist;
        part.best_key = key;
        part.best_state = z;
      }
    };
    visit();
    for (std::uint64_t t = lo + 1; t < hi; ++t) {
      int j = std::countr_zero(t);
      Scalar d2 = 2 * w.col(j).dot(r);
      if (z[static_cast<std::size_t>(j)]) {
        r += w.col(j);
        dist += d2 + wnorm2(j);
        z[static_cast<std::size_t>(j)] = 0;
      } else {
        r -= w.col(j);
        dist += wnorm2(j) - d2;
        z[static_cast<std::size_t>(j)] = 1;
      }
      visit();
    }
  });

  EnumerationReport rep;
  bool first = true;
  Scalar best{};
  std::uint64_t best_key = 0;
  for (const Partial& part : parts) {
    rep.states_visited += part.visited;
    if (!part.any) continue;
    if (first || part.best < best || (part.best == best && part.best_key < best_key)) {
      first = false;
      best = part.best;
      best_key = part.best_key;
      rep.best_state = part.best_state;
    }
  }
  rep.best_distance_sq = BigInt(best);
  return rep;
}

}  // namespace

EnumerationReport enumerate_neighborhood(const RefinementProblem& problem,
                                         std::optional<int> weight_bound, int workers) {
  check_enum_precondition(problem.m(), weight_bound);
  if (!weight_bound && workers > 1 && problem.m() >= 4) {
    if (fits_int64_enum(problem)) return enumerate_partitioned<std::int64_t>(problem, workers);
    return enumerate_partitioned<BigInt>(problem, workers);
  }
  if (fits_int64_enum(problem)) return enumerate_impl<std::int64_t>(problem, weight_bound);
  return enumerate_impl<BigInt>(problem, weight_bound);
}

EnumerationReport enumerate_sr_pairs(const PrimeLattice& lattice, const ReducedBasis& reduced,
                                     const BabaiResult& babai, const FactorBase& base_M,
                                     std::optional<int> weight_bound, int workers) {
  (void)workers;
  check_enum_precondition(lattice.m, weight_bound);

  EnumerationReport rep;
  rep.weight_bound = weight_bound;
  bool first = true;
  BigInt best;
  std::uint64_t best_key = 0;
  std::set<std::pair<BigInt, BigInt>> seen;  // frozen directions may repeat a point

  census_walk(lattice, reduced, babai, base_M, weight_bound,
              [&](const State& z, const BigInt& dist, const BigInt& u, const BigInt& v,
                  bool is_sr) {
                ++rep.states_visited;
                std::uint64_t key = state_key(z);
                if (first || dist < best || (dist == best && key < best_key)) {
                  first = false;
                  best = dist;
                  best_key = key;
                  rep.best_state = z;
                }
                if (!is_sr) return;
                if (!seen.insert({u, v}).second) return;
                rep.sr_pairs.push_back(SrHit{z, u, v, dist});
              });
  rep.best_distance_sq = best;
  return rep;
}

BigInt box_min_distance_sq(const ReducedBasis& reduced, const IntVec& target,
                           const IntVec& babai_coeffs, int radius) {
  const int m = static_cast<int>(reduced.vectors.cols());
  if (babai_coeffs.size() != m)
    throw std::invalid_argument("box_min_distance_sq: coefficient length mismatch");
  IntVec r0 = target - reduced.vectors * babai_coeffs;
  BigInt best = r0.dot(r0);

  // DFS over coefficient offsets in [-radius, radius]^m, residual updated one
  // basis vector at a time.
  IntVec r = r0;
  auto rec = [&](auto&& self, int i) -> void {
    if (i == m) {
      BigInt d = r.dot(r);
      if (d < best) best = d;
      return;
    }
    r += radius * reduced.vectors.col(i);  // start at offset -radius
    for (int delta = -radius; delta <= radius; ++delta) {
      self(self, i + 1);
      if (delta < radius) r -= reduced.vectors.col(i);
    }
    r += radius * reduced.vectors.col(i);  // undo the net -radius shift
  };
  rec(rec, 0);
  return best;
}

void write_census_csv(std::ostream& os, const PrimeLattice& lattice, const ReducedBasis& reduced,
                      const BabaiResult& babai, const FactorBase& base_M,
                      std::optional<int> weight_bound) {
  check_enum_precondition(lattice.m, weight_bound);
  os << "state,distance_sq,is_sr_pair,u,v\n";
  census_walk(lattice, reduced, babai, base_M, weight_bound,
              [&](const State& z, const BigInt& dist, const BigInt& u, const BigInt& v,
                  bool is_sr) {
                os << state_string(z) << ',' << to_decimal(dist) << ',' << (is_sr ? 1 : 0) << ','
                   << to_decimal(u) << ',' << to_decimal(v) << '\n';
              });
}

}  // namespace latfact
