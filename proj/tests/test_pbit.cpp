#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "latfact/pbit.hpp"

using namespace latfact;

namespace {

// Small synthetic instances with controllable energy scale.
RefinementProblem random_problem(int m, int dim, Rng& rng, int coord_range = 3) {
  RefinementProblem p;
  p.target = IntVec::Zero(dim);
  p.b_op = IntVec::Zero(dim);
  for (int r = 0; r < dim; ++r)
    p.target(r) = static_cast<long>(uniform_below(rng, 2 * coord_range + 1)) - coord_range;
  p.basis_vectors = IntMat::Zero(dim, m);
  p.directions = ExpVec::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int r = 0; r < dim; ++r)
      p.basis_vectors(r, i) =
          static_cast<long>(uniform_below(rng, 2 * coord_range + 1)) - coord_range;
    p.directions(i) = uniform_below(rng, 2) ? 1 : -1;
  }
  return p;
}

RefinementProblem one_dim_problem() {
  // t = (3), b_op = (0), d1 = (2), k1 = +1
  RefinementProblem p;
  p.target = IntVec::Zero(1);
  p.target(0) = 3;
  p.b_op = IntVec::Zero(1);
  p.basis_vectors = IntMat::Zero(1, 1);
  p.basis_vectors(0, 0) = 2;
  p.directions = ExpVec::Zero(1);
  p.directions(0) = 1;
  return p;
}

}  // namespace

TEST_CASE("energy identity and 1D example") {
  auto p = one_dim_problem();
  CHECK(energy(p, State{0}) == 9);  // ||3 - 0||^2
  CHECK(energy(p, State{1}) == 1);  // ||3 - 2||^2

  Rng rng = make_rng(2);
  auto q = random_problem(5, 6, rng);
  State zeros(5, 0);
  IntVec r = q.target - q.b_op;
  CHECK(energy(q, zeros) == r.dot(r));
}

TEST_CASE("calculate_bias matches the 1D example and freezes k=0 bits") {
  auto p = one_dim_problem();
  CHECK(energy_gap(p, State{0}, 0) == 8);  // E(0)=9, E(1)=1
  CHECK(calculate_bias(p, State{0}, 0, 1.0) == doctest::Approx(8.0));

  auto frozen = one_dim_problem();
  frozen.directions(0) = 0;
  CHECK(energy_gap(frozen, State{0}, 0) == 0);
  CHECK(calculate_bias(frozen, State{0}, 0, 3.0) == doctest::Approx(0.0));
}

TEST_CASE("bias antisymmetry: the gap does not depend on the bit's own state") {
  Rng rng = make_rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_problem(6, 7, rng);
    State s(6, 0);
    for (auto& b : s) b = static_cast<std::uint8_t>(uniform_below(rng, 2));
    int i = static_cast<int>(uniform_below(rng, 6));
    State s0 = s, s1 = s;
    s0[static_cast<std::size_t>(i)] = 0;
    s1[static_cast<std::size_t>(i)] = 1;
    CHECK(energy_gap(p, s0, i) == energy_gap(p, s1, i));
  }
}

TEST_CASE("incremental bias equals the definitional energy difference exactly") {
  Rng rng = make_rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    auto p = random_problem(5, 6, rng, 4);
    PBitNetwork net(p, 7);
    State s(5, 0);
    for (auto& b : s) b = static_cast<std::uint8_t>(uniform_below(rng, 2));
    net.set_state(s);
    for (int i = 0; i < 5; ++i) {
      CHECK(net.energy_gap_at(i) == energy_gap(p, s, i));
    }
  }
}

TEST_CASE("int64 fast path and BigInt engine agree") {
  Rng rng = make_rng(4);
  auto p = random_problem(6, 7, rng);
  PBitNetwork net(p, 11);
  CHECK(net.uses_fast_path());
  // Blow up the scale so the BigInt engine engages, with identical geometry.
  auto big = p;
  BigInt scale = BigInt(1) << 40;
  for (int r = 0; r < big.target.size(); ++r) big.target(r) *= scale;
  for (int r = 0; r < big.b_op.size(); ++r) big.b_op(r) *= scale;
  for (int c = 0; c < big.basis_vectors.cols(); ++c)
    for (int r = 0; r < big.basis_vectors.rows(); ++r) big.basis_vectors(r, c) *= scale;
  PBitNetwork bignet(big, 11);
  CHECK_FALSE(bignet.uses_fast_path());
  State s(6, 0);
  s[1] = s[4] = 1;
  net.set_state(s);
  bignet.set_state(s);
  for (int i = 0; i < 6; ++i)
    CHECK(bignet.energy_gap_at(i) == net.energy_gap_at(i) * scale * scale);
}

TEST_CASE("sample_pbit limits and Monte-Carlo frequency at bias 2") {
  Rng rng = make_rng(21);
  CHECK(sample_pbit(1e9, rng) == 1);
  CHECK(sample_pbit(-1e9, rng) == 0);

  Rng mc = make_rng(1234);
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += sample_pbit(2.0, mc);
  double p = 1.0 / (1.0 + std::exp(-2.0));  // ~0.8808
  double sigma = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(ones - n * p) <= 3 * sigma);

  Rng fair = make_rng(77);
  ones = 0;
  for (int i = 0; i < n; ++i) ones += sample_pbit(0.0, fair);
  CHECK(std::abs(ones - n * 0.5) <= 3 * std::sqrt(n * 0.25));
}

TEST_CASE("m=1 network sweep equals a single sample_pbit call") {
  auto p = one_dim_problem();
  PBitNetwork net(p, 555);
  double beta = 0.3;
  net.set_beta(beta);
  Rng ref = make_rng(555);
  int expected = sample_pbit(beta * 8.0, ref);  // gap at all-zeros is 8
  net.step();
  CHECK(net.states()[0] == expected);
}

TEST_CASE("state stays put at a local minimum under huge beta") {
  // The flip probability at a frozen state is logistic(-beta * gap) per bit;
  // with beta = 1e9 and all gaps nonzero that is 0 to machine precision. A
  // zero gap is a tie (fair coin forever), so screen those instances out.
  Rng rng = make_rng(31);
  bool tested = false;
  for (int attempt = 0; attempt < 50 && !tested; ++attempt) {
    auto p = random_problem(6, 7, rng);
    PBitNetwork net(p, 99);
    net.set_beta(1e9);
    for (int sweep = 0; sweep < 50; ++sweep) net.step();
    bool has_tie = false;
    for (int i = 0; i < 6; ++i)
      if (net.energy_gap_at(i) == 0) has_tie = true;
    if (has_tie) continue;
    tested = true;
    State frozen = net.states();
    BigInt e_before = net.current_energy();
    for (int sweep = 0; sweep < 100; ++sweep) net.step();
    CHECK(net.states() == frozen);
    CHECK(net.current_energy() == e_before);
  }
  CHECK(tested);
}

TEST_CASE("deterministic trajectories for a fixed seed") {
  Rng rng = make_rng(8);
  auto p = random_problem(8, 9, rng);
  for (auto order : {UpdateOrder::sweep, UpdateOrder::random_single}) {
    PBitNetwork a(p, 2024, order), b(p, 2024, order);
    a.set_beta(0.4);
    b.set_beta(0.4);
    for (int t = 0; t < 50; ++t) {
      a.step();
      b.step();
      REQUIRE(a.states() == b.states());
    }
    CHECK(a.current_energy() == b.current_energy());
  }
}

TEST_CASE("energy cache stays consistent with recomputation") {
  Rng rng = make_rng(63);
  auto p = random_problem(7, 8, rng);
  PBitNetwork net(p, 3);
  net.set_beta(0.2);
  for (int t = 0; t < 30; ++t) {
    net.step();
    CHECK(net.current_energy() == energy(p, net.states()));
  }
}

TEST_CASE("run_refinement finds the all-zeros state when nothing improves") {
  RefinementProblem p;
  p.target = IntVec::Zero(2);
  p.b_op = IntVec::Zero(2);
  p.basis_vectors = IntMat::Zero(2, 1);
  p.basis_vectors(0, 0) = 5;
  p.directions = ExpVec::Zero(1);
  p.directions(0) = 1;
  auto out = run_refinement(p, Schedule::linear(0.05, 5.0, 20), StopRule{}, 9);
  CHECK(out.best_state == State{0});
  CHECK(out.best_energy == 0);
}

TEST_CASE("run_collection emission count contract: 20*m sweeps -> 20*m^2 emissions") {
  Rng rng = make_rng(15);
  for (int m : {3, 5, 8}) {
    auto p = random_problem(m, m + 1, rng);
    for (auto order : {UpdateOrder::sweep, UpdateOrder::random_single}) {
      std::uint64_t emissions = 0;
      std::set<std::uint64_t> distinct;
      auto stats = run_collection(
          p, 0.66, 20 * m,
          [&](const State& s, std::uint64_t) {
            ++emissions;
            distinct.insert(state_key(s));
          },
          31337, order);
      CHECK(emissions == static_cast<std::uint64_t>(20 * m * m));
      CHECK(stats.emissions == emissions);
      CHECK(distinct.size() <= emissions);
    }
  }
}

TEST_CASE("boltzmann convergence on a small constant-beta chain") {
  // The acceptance suite runs the full m=4, 10^6-sweep version; this is the
  // quick regression flavor at m=3.
  Rng rng = make_rng(5);
  RefinementProblem p = random_problem(3, 4, rng, 1);
  const double beta = 0.25;
  PBitNetwork net(p, 777);
  net.set_beta(beta);

  std::map<std::uint64_t, long> counts;
  const int sweeps = 200000;
  for (int t = 0; t < sweeps; ++t) {
    net.step();
    counts[state_key(net.states())]++;
  }

  double z = 0.0;
  std::map<std::uint64_t, double> weight;
  for (int mask = 0; mask < 8; ++mask) {
    State s(3, 0);
    for (int b = 0; b < 3; ++b) s[static_cast<std::size_t>(b)] = (mask >> (2 - b)) & 1;
    double w = std::exp(-beta * energy(p, s).convert_to<double>());
    weight[static_cast<std::uint64_t>(mask)] = w;
    z += w;
  }
  for (auto& [key, w] : weight) {
    double prob = w / z;
    double expect = sweeps * prob;
    double sigma = std::sqrt(sweeps * prob * (1 - prob));
    double got = static_cast<double>(counts[key]);
    CHECK(std::abs(got - expect) <= 4 * sigma + 5);
  }
}

TEST_CASE("trace CSV format") {
  auto p = one_dim_problem();
  auto out =
      run_refinement(p, Schedule::linear(0.1, 2.0, 5), StopRule{}, 1, UpdateOrder::sweep, true);
  REQUIRE(out.trace.size() == static_cast<std::size_t>(out.sweeps_run));
  std::ostringstream os;
  write_trace_csv(os, out.trace);
  CHECK(os.str().rfind("sweep_index,best_energy,current_energy,beta\n", 0) == 0);
}

TEST_CASE("flip_energy_scale is the median non-frozen flip norm") {
  RefinementProblem p;
  p.target = IntVec::Zero(2);
  p.b_op = IntVec::Zero(2);
  p.basis_vectors = IntMat::Zero(2, 3);
  p.basis_vectors(0, 0) = 1;   // norm^2 = 1
  p.basis_vectors(0, 1) = 3;   // norm^2 = 9
  p.basis_vectors(1, 2) = 10;  // norm^2 = 100 but frozen
  p.directions = ExpVec::Zero(3);
  p.directions(0) = 1;
  p.directions(1) = -1;
  p.directions(2) = 0;
  CHECK(flip_energy_scale(p) == doctest::Approx(9.0));
}

TEST_CASE("stored biases track the last computed value per bit") {
  auto p = one_dim_problem();
  PBitNetwork net(p, 9);
  net.set_beta(0.5);
  CHECK(net.biases()[0] == doctest::Approx(0.0));  // nothing computed yet
  net.step();
  // The only bit's bias at the pre-update state (all zeros): 0.5 * 8.
  CHECK(net.biases()[0] == doctest::Approx(4.0));
}

TEST_CASE("schedule interpolation") {
  auto s = Schedule::linear(0.1, 1.0, 10);
  CHECK(s.beta_at(0) == doctest::Approx(0.1));
  CHECK(s.beta_at(9) == doctest::Approx(1.0));
  CHECK(s.beta_at(4) > 0.1);
  CHECK(s.beta_at(4) < 1.0);
  auto c = Schedule::constant_beta(0.66, 5);
  CHECK(c.beta_at(0) == doctest::Approx(0.66));
  CHECK(c.beta_at(4) == doctest::Approx(0.66));
}
