#include "latfact/pbit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace latfact {

RefinementProblem RefinementProblem::from(const PrimeLattice& lattice,
                                          const ReducedBasis& reduced,
                                          const BabaiResult& babai) {
  RefinementProblem p;
  p.target = lattice.target;
  p.b_op = babai.b_op;
  p.basis_vectors = reduced.vectors;
  p.directions = babai.directions;
  return p;
}

BigInt energy(const RefinementProblem& problem, const State& s) {
  if (static_cast<int>(s.size()) != problem.m())
    throw std::invalid_argument("energy: state has wrong length");
  IntVec r = problem.target - problem.b_op;
  for (int i = 0; i < problem.m(); ++i) {
    if (!s[static_cast<std::size_t>(i)]) continue;
    int k = problem.directions(i);
    if (k == 1)
      r -= problem.basis_vectors.col(i);
    else if (k == -1)
      r += problem.basis_vectors.col(i);
  }
  return r.dot(r);
}

BigInt energy_gap(const RefinementProblem& problem, const State& s, int i) {
  State s0 = s;
  s0[static_cast<std::size_t>(i)] = 0;
  State s1 = s;
  s1[static_cast<std::size_t>(i)] = 1;
  return energy(problem, s0) - energy(problem, s1);
}

double flip_energy_scale(const RefinementProblem& problem) {
  std::vector<double> w2;
  for (int i = 0; i < problem.m(); ++i) {
    if (problem.directions(i) == 0) continue;
    BigInt n2 = problem.basis_vectors.col(i).dot(problem.basis_vectors.col(i));
    w2.push_back(n2.convert_to<double>());
  }
  if (w2.empty()) return 1.0;
  std::nth_element(w2.begin(), w2.begin() + w2.size() / 2, w2.end());
  double q = w2[w2.size() / 2];
  return q > 0 ? q : 1.0;
}

namespace {

double clamp_bias(double b) {
  // exp() stays finite; the logistic is exactly 0/1 past this point anyway.
  if (b > 700.0) return 700.0;
  if (b < -700.0) return -700.0;
  return b;
}

}  // namespace

double calculate_bias(const RefinementProblem& problem, const State& s, int i, double beta) {
  BigInt gap = energy_gap(problem, s, i);
  return clamp_bias(beta * gap.convert_to<double>());
}

int sample_pbit(double bias, Rng& rng) {
  double p1 = 1.0 / (1.0 + std::exp(-clamp_bias(bias)));
  return unit_uniform(rng) < p1 ? 1 : 0;
}

double Schedule::beta_at(int sweep) const {
  if (kind == Kind::constant || total_sweeps <= 1) return beta_start;
  double t = static_cast<double>(sweep) / static_cast<double>(total_sweeps - 1);
  return beta_start + (beta_end - beta_start) * t;
}

Schedule Schedule::constant_beta(double beta, int sweeps) {
  return Schedule{Kind::constant, beta, beta, sweeps};
}

Schedule Schedule::linear(double beta_start, double beta_end, int sweeps) {
  return Schedule{Kind::linear, beta_start, beta_end, sweeps};
}

namespace detail {

template <class Scalar>
Scalar to_scalar(const BigInt& v) {
  if constexpr (std::is_same_v<Scalar, BigInt>) {
    return v;
  } else {
    return v.convert_to<Scalar>();
  }
}

inline double to_double_helper(std::int64_t v) { return static_cast<double>(v); }
inline double to_double_helper(const BigInt& v) { return v.convert_to<double>(); }

template <class Scalar>
GibbsEngine<Scalar>::GibbsEngine(const RefinementProblem& problem, std::uint64_t seed)
    : rng_(make_rng(seed)) {
  const int dim = problem.ambient_dim();
  const int n = problem.m();
  w_ = Mat::Zero(dim, n);
  base_ = Vec(dim);
  wnorm2_ = Vec(n);
  for (int r = 0; r < dim; ++r)
    base_(r) = to_scalar<Scalar>(problem.target(r) - problem.b_op(r));
  for (int i = 0; i < n; ++i) {
    int k = problem.directions(i);
    if (k != 0) {
      for (int r = 0; r < dim; ++r)
        w_(r, i) = to_scalar<Scalar>(k == 1 ? problem.basis_vectors(r, i)
                                            : BigInt(-problem.basis_vectors(r, i)));
    }
    wnorm2_(i) = w_.col(i).dot(w_.col(i));
  }
  residual_ = base_;
  energy_ = residual_.dot(residual_);
  s_.assign(static_cast<std::size_t>(n), 0);
  biases_.assign(static_cast<std::size_t>(n), 0.0);
}

template <class Scalar>
void GibbsEngine<Scalar>::set_state(const State& s) {
  if (static_cast<int>(s.size()) != m())
    throw std::invalid_argument("set_state: wrong length");
  s_ = s;
  residual_ = base_;
  for (int i = 0; i < m(); ++i)
    if (s_[static_cast<std::size_t>(i)]) residual_ -= w_.col(i);
  energy_ = residual_.dot(residual_);
}

template <class Scalar>
Scalar GibbsEngine<Scalar>::gap(int i) const {
  // E(s_i=0) - E(s_i=1) = 2 <w_i, r0> - ||w_i||^2 with r0 the residual at s_i=0.
  Scalar dot = w_.col(i).dot(residual_);
  if (s_[static_cast<std::size_t>(i)]) dot += wnorm2_(i);
  return 2 * dot - wnorm2_(i);
}

template <class Scalar>
void GibbsEngine<Scalar>::apply_state_change(int i, int new_state) {
  int old_state = s_[static_cast<std::size_t>(i)];
  if (new_state == old_state) return;
  Scalar g = gap(i);
  if (new_state == 1) {
    residual_ -= w_.col(i);
    energy_ -= g;
  } else {
    residual_ += w_.col(i);
    energy_ += g;
  }
  s_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(new_state);
}

template <class Scalar>
void GibbsEngine<Scalar>::update_bit(int i) {
  double bias = clamp_bias(beta_ * static_cast<double>(to_double_helper(gap(i))));
  biases_[static_cast<std::size_t>(i)] = bias;
  apply_state_change(i, sample_pbit(bias, rng_));
}

template <class Scalar>
void GibbsEngine<Scalar>::resample_from_stored(int j) {
  apply_state_change(j, sample_pbit(biases_[static_cast<std::size_t>(j)], rng_));
}

template <class Scalar>
void GibbsEngine<Scalar>::random_iteration() {
  int i = static_cast<int>(uniform_below(rng_, static_cast<std::uint64_t>(m())));
  for (int j = 0; j < m(); ++j) {
    if (j != i) resample_from_stored(j);
  }
  biases_[static_cast<std::size_t>(i)] =
      clamp_bias(beta_ * static_cast<double>(to_double_helper(gap(i))));
}

template class GibbsEngine<std::int64_t>;
template class GibbsEngine<BigInt>;

}  // namespace detail

namespace {

// Worst-case bound deciding whether the int64 engine is exact for this
// instance: every residual coordinate stays within base + sum |w_i|, and all
// dot products stay within (dim) * bound * max|w|.
bool fits_int64(const RefinementProblem& problem) {
  const BigInt limit = BigInt(1) << 62;
  BigInt coord_bound = 0;
  BigInt max_w = 0;
  for (int r = 0; r < problem.ambient_dim(); ++r) {
    BigInt row = abs(problem.target(r) - problem.b_op(r));
    for (int i = 0; i < problem.m(); ++i) {
      row += abs(problem.basis_vectors(r, i));
      max_w = std::max(max_w, abs(problem.basis_vectors(r, i)));
    }
    coord_bound = std::max(coord_bound, row);
  }
  BigInt dot_bound = BigInt(problem.ambient_dim()) * coord_bound * std::max<BigInt>(max_w, coord_bound);
  return 4 * dot_bound < limit;
}

}  // namespace

PBitNetwork::PBitNetwork(const RefinementProblem& problem, std::uint64_t seed, UpdateOrder order)
    : engine_(fits_int64(problem)
                  ? decltype(engine_){detail::GibbsEngine<std::int64_t>(problem, seed)}
                  : decltype(engine_){detail::GibbsEngine<BigInt>(problem, seed)}),
      order_(order),
      fast_(std::holds_alternative<detail::GibbsEngine<std::int64_t>>(engine_)) {}

int PBitNetwork::m() const {
  return std::visit([](const auto& e) { return e.m(); }, engine_);
}

const State& PBitNetwork::states() const {
  return std::visit([](const auto& e) -> const State& { return e.states(); }, engine_);
}

void PBitNetwork::set_state(const State& s) {
  std::visit([&](auto& e) { e.set_state(s); }, engine_);
}

const std::vector<double>& PBitNetwork::biases() const {
  return std::visit([](const auto& e) -> const std::vector<double>& { return e.stored_biases(); },
                    engine_);
}

double PBitNetwork::beta() const {
  return std::visit([](const auto& e) { return e.beta(); }, engine_);
}

void PBitNetwork::set_beta(double beta) {
  std::visit([&](auto& e) { e.set_beta(beta); }, engine_);
}

BigInt PBitNetwork::current_energy() const {
  return std::visit([](const auto& e) { return BigInt(e.current_energy()); }, engine_);
}

BigInt PBitNetwork::energy_gap_at(int i) const {
  return std::visit([&](const auto& e) { return BigInt(e.gap(i)); }, engine_);
}

void PBitNetwork::step(const std::function<void(const State&)>& on_update) {
  std::visit(
      [&](auto& e) {
        if (order_ == UpdateOrder::sweep) {
          e.sweep([&](int) {
            if (on_update) on_update(e.states());
          });
        } else {
          // One sweep-equivalent: m single-site iterations, so emission
          // counts match across update orders.
          for (int i = 0; i < e.m(); ++i) {
            e.random_iteration();
            if (on_update) on_update(e.states());
          }
        }
      },
      engine_);
}

RefinementOutcome run_refinement(const RefinementProblem& problem, const Schedule& schedule,
                                 const StopRule& stop, std::uint64_t seed, UpdateOrder order,
                                 bool keep_trace) {
  PBitNetwork net(problem, seed, order);
  const double scale = flip_energy_scale(problem);
  RefinementOutcome out;
  out.best_state = net.states();
  out.best_energy = net.current_energy();
  out.first_hit_sweep = 0;

  auto target_met = [&] { return stop.target_energy && out.best_energy <= *stop.target_energy; };

  int sweep = 0;
  auto track = [&](const State& s) {
    (void)s;
    BigInt e = net.current_energy();
    if (e < out.best_energy) {
      out.best_energy = e;
      out.best_state = net.states();
      out.first_hit_sweep = sweep;
    }
  };

  for (sweep = 1; sweep <= schedule.total_sweeps; ++sweep) {
    if (target_met()) break;
    net.set_beta(schedule.beta_at(sweep - 1) / scale);
    net.step(track);
    out.sweeps_run = sweep;
    if (keep_trace)
      out.trace.push_back(
          TracePoint{sweep, out.best_energy, net.current_energy(), schedule.beta_at(sweep - 1)});
  }
  out.hit_target = target_met();
  return out;
}

CollectionStats run_collection(const RefinementProblem& problem, double beta, int sweeps,
                               const StateSink& sink, std::uint64_t seed, UpdateOrder order) {
  if (sweeps < 0) throw std::invalid_argument("run_collection: sweeps must be >= 0");
  PBitNetwork net(problem, seed, order);
  net.set_beta(beta / flip_energy_scale(problem));
  CollectionStats stats;
  for (int sweep = 1; sweep <= sweeps; ++sweep) {
    net.step([&](const State& s) {
      ++stats.emissions;
      if (sink) sink(s, static_cast<std::uint64_t>(sweep));
    });
    ++stats.sweeps;
  }
  return stats;
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  os << "sweep_index,best_energy,current_energy,beta\n";
  for (const auto& t : trace) {
    os << t.sweep << ',' << to_decimal(t.best_energy) << ',' << to_decimal(t.current_energy)
       << ',' << t.beta << '\n';
  }
}

}  // namespace latfact
