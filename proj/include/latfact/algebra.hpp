#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "latfact/sieve.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// Signed ratio vector e~ = e' - e of length M+1; index 0 is the sign element.
ExpVec ratio_vector(const SrPair& pair);

/// Dense bit matrix over GF(2) with rows indexed by factor-base elements
/// (including the sign row) and one column per relation.
class GF2Matrix {
 public:
  GF2Matrix(std::size_t rows, std::size_t cols);
  static GF2Matrix from_relations(const std::vector<SrPair>& relations, std::size_t M);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  void set(std::size_t r, std::size_t c, bool v);
  bool get(std::size_t r, std::size_t c) const;

  /// M * tau over GF(2); tau has one entry per column.
  std::vector<std::uint8_t> multiply(const std::vector<std::uint8_t>& tau) const;

 private:
  std::size_t rows_, cols_;
  std::vector<std::vector<std::uint64_t>> row_bits_;  // row-major 64-bit blocks

  friend std::vector<std::vector<std::uint8_t>> nullspace_gf2(const GF2Matrix&);
};

/// Basis of the right nullspace via Gaussian elimination. Empty when the
/// columns are independent.
std::vector<std::vector<std::uint8_t>> nullspace_gf2(const GF2Matrix& matrix);

struct CongruenceResult {
  std::vector<std::uint8_t> tau;
  BigInt X;
  BigInt Y;
  std::optional<std::pair<BigInt, BigInt>> factors;
};

/// Builds X, Y mod N from the selected relations; asserts the halved
/// exponents are integral and that X^2 == Y^2 (mod N). Factors are filled in
/// when the congruence is nontrivial.
CongruenceResult assemble_congruence(const std::vector<std::uint8_t>& tau,
                                     const std::vector<SrPair>& relations, const BigInt& N);

/// (gcd(|X-Y|, N), gcd(X+Y, N)) normalized so p <= q and p*q == N; absent for
/// trivial congruences.
std::optional<std::pair<BigInt, BigInt>> extract_factors(const CongruenceResult& result,
                                                         const BigInt& N);

enum class FactorStatus {
  success,
  invalid_input,      // parse-level problems (handled by the CLI layer)
  invalid_even,       // factor 2 reported
  invalid_prime,
  invalid_perfect_power,
  invalid_too_small,  // N < 15
  budget_exhausted,
};

struct FactorParams {
  CampaignParams campaign;
  int tau_trial_cap = 256;    // candidate tau vectors per linear-algebra round
  std::size_t retry_step = 0; // extra relations per round; 0 -> max(4, (M+2)/10)
  int max_bound_escalations = 4;  // times M may grow when the relation
                                  // universe saturates with trivial congruences
  int workers = 1;
};

struct FactorReport {
  BigInt n;
  FactorStatus status = FactorStatus::success;
  std::optional<std::pair<BigInt, BigInt>> factors;
  std::string detail;  // human-readable status note
  std::size_t relations_used = 0;
  std::uint64_t lattices_consumed = 0;
  double collision_rate = 0.0;
  int tau_trials = 0;
  int linear_algebra_rounds = 0;
  int bound_escalations = 0;
  double elapsed_seconds = 0.0;
  int m = 0;
  int M = 0;  // final smoothness bound (after any escalation)
  RelationStats campaign_stats;
  std::vector<SrPair> relations;  // final relation set (for JSONL dumps)
};

/// Full factoring loop: screen N, collect relations, solve the GF(2) system,
/// assemble congruences until a nontrivial one splits N.
FactorReport factor(const BigInt& N, const FactorParams& params, std::uint64_t seed);

nlohmann::json report_to_json(const FactorReport& report);

}  // namespace latfact
