#include "latfact/lattice.hpp"

#include <mpfr.h>

#include <stdexcept>

#include "latfact/numtheory.hpp"

namespace latfact {

BigInt scaled_log_round(const BigInt& x, int c) {
  if (x < 2) throw std::invalid_argument("scaled_log_round: x must be >= 2");
  if (c < 1) throw std::invalid_argument("scaled_log_round: c must be >= 1");
  BigInt pow10 = pow(BigInt(10), static_cast<unsigned>(c));
  mpfr_prec_t prec = static_cast<mpfr_prec_t>(bit_length(x)) + 96;
  while (true) {
    mpfr_t lo, hi;
    mpfr_init2(lo, prec);
    mpfr_init2(hi, prec);
    mpfr_set_z(lo, x.backend().data(), MPFR_RNDD);
    mpfr_set_z(hi, x.backend().data(), MPFR_RNDU);
    mpfr_log(lo, lo, MPFR_RNDD);
    mpfr_log(hi, hi, MPFR_RNDU);
    mpfr_mul_z(lo, lo, pow10.backend().data(), MPFR_RNDD);
    mpfr_mul_z(hi, hi, pow10.backend().data(), MPFR_RNDU);
    mpfr_add_d(lo, lo, 0.5, MPFR_RNDD);
    mpfr_add_d(hi, hi, 0.5, MPFR_RNDU);
    BigInt zlo, zhi;
    mpfr_get_z(zlo.backend().data(), lo, MPFR_RNDD);
    mpfr_get_z(zhi.backend().data(), hi, MPFR_RNDD);
    mpfr_clear(lo);
    mpfr_clear(hi);
    // Both interval endpoints floor to the same integer: rounding certified.
    if (zlo == zhi) return zlo;
    prec *= 2;
  }
}

PrimeLattice build_prime_lattice(const BigInt& N, int m, int c, Rng& rng) {
  if (N < 15 || mp::integer_modulus(N, 2ul) == 0)
    throw std::invalid_argument("build_prime_lattice: N must be odd and >= 15");
  if (m < 2) throw std::invalid_argument("build_prime_lattice: m must be >= 2");
  if (c < 1) throw std::invalid_argument("build_prime_lattice: c must be >= 1");

  PrimeLattice lat;
  lat.n = N;
  lat.m = m;
  lat.c = c;
  lat.f.resize(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) lat.f[static_cast<std::size_t>(i - 1)] = (i + 1) / 2;
  deterministic_shuffle(lat.f, rng);

  auto primes = first_primes(static_cast<std::size_t>(m));
  lat.basis = IntMat::Zero(m + 1, m);
  for (int j = 0; j < m; ++j) {
    lat.basis(j, j) = lat.f[static_cast<std::size_t>(j)];
    lat.basis(m, j) = scaled_log_round(BigInt(primes[static_cast<std::size_t>(j)]), c);
  }
  lat.target = IntVec::Zero(m + 1);
  lat.target(m) = scaled_log_round(N, c);
  return lat;
}

GramSchmidt gram_schmidt(const IntMat& vectors) {
  const Eigen::Index n = vectors.cols();
  const Eigen::Index dim = vectors.rows();
  GramSchmidt gs;
  gs.orthogonal = RatMat(dim, n);
  gs.mu = RatMat::Zero(n, n);
  gs.sq_norms = RatVec(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    RatVec b = to_rat(vectors.col(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      BigRat mu = b.dot(gs.orthogonal.col(j)) / gs.sq_norms(j);
      gs.mu(i, j) = mu;
      b -= mu * gs.orthogonal.col(j);
    }
    gs.sq_norms(i) = b.dot(b);
    if (gs.sq_norms(i) == 0)
      throw std::invalid_argument("gram_schmidt: vectors are linearly dependent");
    gs.orthogonal.col(i) = b;
    gs.mu(i, i) = 1;
  }
  return gs;
}

namespace {

// Integer LLL state: lambda(i,j) = d[j+1] * mu(i,j) and d[i] = det of the
// Gram matrix of the first i vectors, all exact integers.
struct IntegerLll {
  IntMat b;       // working basis columns
  IntMat u;       // transform columns, original * u == b
  IntMat lambda;  // strictly lower triangular
  std::vector<BigInt> d;  // size n+1, d[0] = 1

  explicit IntegerLll(const IntMat& basis)
      : b(basis),
        u(IntMat::Identity(basis.cols(), basis.cols())),
        lambda(IntMat::Zero(basis.cols(), basis.cols())),
        d(static_cast<std::size_t>(basis.cols()) + 1) {
    const Eigen::Index n = b.cols();
    d[0] = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        BigInt t = b.col(i).dot(b.col(j));
        for (Eigen::Index k = 0; k < j; ++k) {
          t = (d[static_cast<std::size_t>(k) + 1] * t - lambda(i, k) * lambda(j, k)) /
              d[static_cast<std::size_t>(k)];
        }
        if (j < i) {
          lambda(i, j) = t;
        } else {
          if (t <= 0) throw std::invalid_argument("lll_reduce: basis is linearly dependent");
          d[static_cast<std::size_t>(i) + 1] = t;
        }
      }
    }
  }

  void size_reduce(Eigen::Index k, Eigen::Index l) {
    const BigInt& dl = d[static_cast<std::size_t>(l) + 1];
    if (2 * abs(lambda(k, l)) <= dl) return;
    BigInt q = round_nearest(make_rat(lambda(k, l), dl));
    b.col(k) -= q * b.col(l);
    u.col(k) -= q * u.col(l);
    lambda(k, l) -= q * dl;
    for (Eigen::Index j = 0; j < l; ++j) lambda(k, j) -= q * lambda(l, j);
  }

  void swap_step(Eigen::Index p) {
    const Eigen::Index n = b.cols();
    b.col(p).swap(b.col(p - 1));
    u.col(p).swap(u.col(p - 1));
    for (Eigen::Index j = 0; j + 1 < p; ++j) std::swap(lambda(p, j), lambda(p - 1, j));
    BigInt lam = lambda(p, p - 1);
    BigInt bNew = (d[static_cast<std::size_t>(p) - 1] * d[static_cast<std::size_t>(p) + 1] +
                   lam * lam) /
                  d[static_cast<std::size_t>(p)];
    for (Eigen::Index i = p + 1; i < n; ++i) {
      BigInt t = lambda(i, p);
      lambda(i, p) = (d[static_cast<std::size_t>(p) + 1] * lambda(i, p - 1) - lam * t) /
                     d[static_cast<std::size_t>(p)];
      lambda(i, p - 1) =
          (bNew * t + lam * lambda(i, p)) / d[static_cast<std::size_t>(p) + 1];
    }
    d[static_cast<std::size_t>(p)] = bNew;
  }

  // Lovasz test in integer form: swap iff
  //   den * (d[p+1]*d[p-1] + lambda^2) < num * d[p]^2.
  bool lovasz_fails(Eigen::Index p, const BigInt& num, const BigInt& den) const {
    const BigInt& lam = lambda(p, p - 1);
    BigInt lhs = den * (d[static_cast<std::size_t>(p) + 1] * d[static_cast<std::size_t>(p) - 1] +
                        lam * lam);
    BigInt rhs = num * d[static_cast<std::size_t>(p)] * d[static_cast<std::size_t>(p)];
    return lhs < rhs;
  }
};

}  // namespace

ReducedBasis lll_reduce(const IntMat& basis, const BigRat& delta) {
  if (delta <= BigRat(1, 4) || delta >= 1)
    throw std::invalid_argument("lll_reduce: delta must lie in (1/4, 1)");
  const BigInt num = numerator(delta);
  const BigInt den = denominator(delta);

  IntegerLll state(basis);
  const Eigen::Index n = basis.cols();
  Eigen::Index k = 1;
  while (k < n) {
    state.size_reduce(k, k - 1);
    if (state.lovasz_fails(k, num, den)) {
      state.swap_step(k);
      k = std::max<Eigen::Index>(k - 1, 1);
    } else {
      for (Eigen::Index l = k - 2; l >= 0; --l) state.size_reduce(k, l);
      ++k;
    }
  }

  ReducedBasis out;
  out.vectors = std::move(state.b);
  out.transform = std::move(state.u);
  out.gso = gram_schmidt(out.vectors);
  return out;
}

ReducedBasis lll_reduce(const PrimeLattice& lattice, const BigRat& delta) {
  return lll_reduce(lattice.basis, delta);
}

BabaiResult babai_nearest_plane(const ReducedBasis& reduced, const RatVec& target) {
  const Eigen::Index n = reduced.vectors.cols();
  if (target.size() != reduced.vectors.rows())
    throw std::invalid_argument("babai_nearest_plane: dimension mismatch");

  BabaiResult res;
  res.mu = RatVec(n);
  res.roundings = IntVec(n);
  res.directions = ExpVec::Zero(static_cast<int>(n));

  RatVec r = target;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    BigRat mu = r.dot(reduced.gso.orthogonal.col(i)) / reduced.gso.sq_norms(i);
    BigInt c = round_nearest(mu);
    BigRat leftover = mu - BigRat(c);
    res.mu(i) = mu;
    res.roundings(i) = c;
    res.directions(static_cast<int>(i)) = leftover > 0 ? 1 : (leftover < 0 ? -1 : 0);
    if (c != 0) {
      for (Eigen::Index row = 0; row < r.size(); ++row)
        r(row) -= BigRat(c * reduced.vectors(row, i));
    }
  }
  res.b_op = reduced.vectors * res.roundings;
  return res;
}

BabaiResult babai_nearest_plane(const ReducedBasis& reduced, const IntVec& target) {
  return babai_nearest_plane(reduced, to_rat(target));
}

IntVec coefficients_of(const IntVec& point, const PrimeLattice& lattice) {
  const int m = lattice.m;
  if (point.size() != m + 1)
    throw std::invalid_argument("coefficients_of: point has wrong dimension");
  IntVec e(m);
  for (int j = 0; j < m; ++j) {
    // Diagonal rows give the least-squares solution directly; rounding makes
    // the candidate integral before exact verification below.
    e(j) = round_nearest(make_rat(point(j), BigInt(lattice.f[static_cast<std::size_t>(j)])));
  }
  IntVec back = lattice.basis * e;
  for (int row = 0; row <= m; ++row) {
    if (back(row) != point(row)) throw PointNotInLattice("point not in lattice");
  }
  return e;
}

IntVec neighborhood_point(const BabaiResult& babai, const ReducedBasis& reduced, const State& z) {
  const Eigen::Index n = reduced.vectors.cols();
  if (static_cast<Eigen::Index>(z.size()) != n)
    throw std::invalid_argument("neighborhood_point: state has wrong length");
  IntVec p = babai.b_op;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!z[static_cast<std::size_t>(i)]) continue;
    int k = babai.directions(static_cast<int>(i));
    if (k == 1)
      p += reduced.vectors.col(i);
    else if (k == -1)
      p -= reduced.vectors.col(i);
  }
  return p;
}

BigInt determinant_abs(const IntMat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("determinant_abs: matrix must be square");
  const Eigen::Index n = a.rows();
  if (n == 0) return 1;
  IntMat w = a;
  BigInt prev = 1;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    Eigen::Index pivot = -1;
    for (Eigen::Index r = k; r < n; ++r) {
      if (w(r, k) != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) return 0;
    if (pivot != k) w.row(pivot).swap(w.row(k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j < n; ++j) {
        w(i, j) = (w(k, k) * w(i, j) - w(i, k) * w(k, j)) / prev;
      }
      w(i, k) = 0;
    }
    prev = w(k, k);
  }
  return abs(w(n - 1, n - 1));
}

nlohmann::json lattice_to_json(const PrimeLattice& lattice) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n"] = to_decimal(lattice.n);
  j["m"] = lattice.m;
  j["c"] = lattice.c;
  j["f"] = lattice.f;
  auto rows = nlohmann::json::array();
  for (int r = 0; r <= lattice.m; ++r) {
    auto row = nlohmann::json::array();
    for (int col = 0; col < lattice.m; ++col) row.push_back(to_decimal(lattice.basis(r, col)));
    rows.push_back(std::move(row));
  }
  j["basis_rows"] = std::move(rows);
  auto tgt = nlohmann::json::array();
  for (int r = 0; r <= lattice.m; ++r) tgt.push_back(to_decimal(lattice.target(r)));
  j["target"] = std::move(tgt);
  return j;
}

PrimeLattice lattice_from_json(const nlohmann::json& j) {
  PrimeLattice lat;
  lat.n = parse_decimal(j.at("n").get<std::string>());
  lat.m = j.at("m").get<int>();
  lat.c = j.at("c").get<int>();
  lat.f = j.at("f").get<std::vector<int>>();
  if (static_cast<int>(lat.f.size()) != lat.m)
    throw std::invalid_argument("lattice_from_json: f has wrong length");
  const auto& rows = j.at("basis_rows");
  if (static_cast<int>(rows.size()) != lat.m + 1)
    throw std::invalid_argument("lattice_from_json: basis has wrong row count");
  lat.basis = IntMat(lat.m + 1, lat.m);
  for (int r = 0; r <= lat.m; ++r) {
    const auto& row = rows.at(static_cast<std::size_t>(r));
    if (static_cast<int>(row.size()) != lat.m)
      throw std::invalid_argument("lattice_from_json: basis has wrong column count");
    for (int col = 0; col < lat.m; ++col)
      lat.basis(r, col) = parse_decimal(row.at(static_cast<std::size_t>(col)).get<std::string>());
  }
  const auto& tgt = j.at("target");
  if (static_cast<int>(tgt.size()) != lat.m + 1)
    throw std::invalid_argument("lattice_from_json: target has wrong length");
  lat.target = IntVec(lat.m + 1);
  for (int r = 0; r <= lat.m; ++r)
    lat.target(r) = parse_decimal(tgt.at(static_cast<std::size_t>(r)).get<std::string>());
  return lat;
}

}  // namespace latfact
