#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "latfact/lattice.hpp"
#include "latfact/rng.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// CVP refinement instance: search b_op + sum s_i k_i d_i over s in {0,1}^m,
/// minimizing the squared distance to the target.
struct RefinementProblem {
  IntVec target;
  IntVec b_op;
  IntMat basis_vectors;  // (dim) x m reduced basis columns d_i
  ExpVec directions;     // k in {-1,0,+1}^m

  int m() const { return static_cast<int>(basis_vectors.cols()); }
  int ambient_dim() const { return static_cast<int>(basis_vectors.rows()); }

  static RefinementProblem from(const PrimeLattice& lattice, const ReducedBasis& reduced,
                                const BabaiResult& babai);
};

/// ||t - (b_op + sum s_i k_i d_i)||^2, exact.
BigInt energy(const RefinementProblem& problem, const State& s);

/// Characteristic flip energy of the neighborhood: the median ||k_i d_i||^2
/// over non-frozen directions (1 when every direction is frozen). The
/// refinement and collection drivers interpret their beta settings in units
/// of this quantum so the same numeric temperature works across instance
/// sizes; the network itself always samples the literal Boltzmann bias.
double flip_energy_scale(const RefinementProblem& problem);

/// E(s with s_i = 0) - E(s with s_i = 1), exact (no beta scaling).
BigInt energy_gap(const RefinementProblem& problem, const State& s, int i);

/// beta * (E(s|s_i=0) - E(s|s_i=1)).
double calculate_bias(const RefinementProblem& problem, const State& s, int i, double beta);

/// 1 with probability logistic(bias) = 1/(1+exp(-bias)).
int sample_pbit(double bias, Rng& rng);

struct Schedule {
  enum class Kind { constant, linear };
  Kind kind = Kind::constant;
  double beta_start = 0.66;
  double beta_end = 0.66;
  int total_sweeps = 1;

  double beta_at(int sweep) const;
  static Schedule constant_beta(double beta, int sweeps);
  static Schedule linear(double beta_start, double beta_end, int sweeps);
};

enum class UpdateOrder {
  sweep,          // fixed index order, one full pass per iteration
  random_single,  // uniformly random p-bit, neighbors resampled from stored biases
};

namespace detail {

/// Gibbs engine over a scalar type. Scalar is int64_t when the worst-case
/// energy bound allows it, BigInt otherwise; both produce identical
/// trajectories because the bias value fed to the sampler is exact either way.
template <class Scalar>
class GibbsEngine {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GibbsEngine(const RefinementProblem& problem, std::uint64_t seed);

  int m() const { return static_cast<int>(w_.cols()); }
  const State& states() const { return s_; }
  void set_state(const State& s);

  Scalar gap(int i) const;  // E(s_i=0) - E(s_i=1) at the current state
  Scalar current_energy() const { return energy_; }

  double beta() const { return beta_; }
  void set_beta(double beta) { beta_ = beta; }

  /// Updates p-bit i: recompute bias, resample, patch residual and energy.
  void update_bit(int i);

  /// One full sweep in index order; on_update runs after every bit update.
  template <class Fn>
  void sweep(Fn&& on_update) {
    for (int i = 0; i < m(); ++i) {
      update_bit(i);
      on_update(i);
    }
  }

  /// One iteration of the random-order mode: pick i uniformly, resample all
  /// neighbors j != i from their stored biases, then refresh bias_i.
  void random_iteration();

  const std::vector<double>& stored_biases() const { return biases_; }

 private:
  void resample_from_stored(int j);
  void apply_state_change(int i, int new_state);

  Mat w_;        // columns w_i = k_i * d_i
  Vec base_;     // t - b_op
  Vec residual_; // t - b_op - sum s_i w_i
  Vec wnorm2_;   // ||w_i||^2
  Scalar energy_;
  State s_;
  std::vector<double> biases_;
  double beta_ = 0.66;
  Rng rng_;
};

}  // namespace detail

/// p-bit network simulator. Wraps the int64 fast engine when the instance's
/// worst-case energy fits comfortably, the arbitrary-precision engine
/// otherwise; the sampled trajectory is identical in both cases.
class PBitNetwork {
 public:
  PBitNetwork(const RefinementProblem& problem, std::uint64_t seed,
              UpdateOrder order = UpdateOrder::sweep);

  int m() const;
  const State& states() const;
  void set_state(const State& s);
  const std::vector<double>& biases() const;  // last bias computed per p-bit
  double beta() const;
  void set_beta(double beta);

  BigInt current_energy() const;
  BigInt energy_gap_at(int i) const;  // exact gap from the cached residual
  bool uses_fast_path() const { return fast_; }
  UpdateOrder order() const { return order_; }

  /// One iteration: a full sweep (sweep order) or a single random-site step.
  /// on_update(state) runs after every p-bit update.
  void step(const std::function<void(const State&)>& on_update = nullptr);

 private:
  template <class Fn> void step_impl(Fn&& on_update);

  std::variant<detail::GibbsEngine<std::int64_t>, detail::GibbsEngine<BigInt>> engine_;
  UpdateOrder order_;
  bool fast_;
};

struct TracePoint {
  int sweep = 0;
  BigInt best_energy;
  BigInt current_energy;
  double beta = 0.0;
};

struct StopRule {
  std::optional<BigInt> target_energy;  // stop once best <= target
};

struct RefinementOutcome {
  State best_state;
  BigInt best_energy;
  int first_hit_sweep = 0;  // sweep at which best_energy was first reached
  int sweeps_run = 0;
  bool hit_target = false;
  std::vector<TracePoint> trace;
};

/// Anneals the network over schedule.total_sweeps sweeps and returns the best
/// state seen across every sampled state. The trace has one row per sweep.
RefinementOutcome run_refinement(const RefinementProblem& problem, const Schedule& schedule,
                                 const StopRule& stop, std::uint64_t seed,
                                 UpdateOrder order = UpdateOrder::sweep,
                                 bool keep_trace = false);

struct CollectionStats {
  std::uint64_t emissions = 0;
  std::uint64_t sweeps = 0;
};

using StateSink = std::function<void(const State&, std::uint64_t sweep_index)>;

/// Exploration mode: constant beta, fixed sweep budget, and the instantaneous
/// global state handed to the sink after every p-bit update. The sink must
/// not block the sampling loop.
CollectionStats run_collection(const RefinementProblem& problem, double beta, int sweeps,
                               const StateSink& sink, std::uint64_t seed,
                               UpdateOrder order = UpdateOrder::sweep);

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

}  // namespace latfact
