#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "latfact/sieve.hpp"
#include "latfact/types.hpp"

namespace latfact {

/// Bit-length to lattice-dimension mappings studied by the harness.
enum class Mapping {
  linear_third,   // m = ceil(bits / 3)
  linear_half,    // m = ceil(bits / 2)
  sublinear,      // m = ceil(1.5 * bits / log2(bits))
};

int map_dimension(Mapping mapping, int bits);
std::string mapping_name(Mapping mapping);

struct ConfidenceInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// mean +/- 1.96 * stderr over the samples (95% normal interval).
ConfidenceInterval confidence_interval(const std::vector<double>& samples);

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
  double t_stat = 0.0;   // slope / se(slope)
  int df = 0;
};

Ols least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided critical value of Student's t at alpha = 0.05 for small df.
double t_critical_05(int df);

struct ExperimentConfig {
  std::string id;                 // fig2a | fig2b | fig3 | fig4
  int bits_min = 20;
  int bits_max = 40;
  int bits_step = 4;
  int dim_min = 8;                // fig2a dimension sweep
  int dim_max = 14;
  int lattices = 0;               // 0 -> per-experiment default
  int semiprimes = 0;             // 0 -> per-experiment default (fig4)
  bool paper_scale = false;       // restore the published dataset sizes
  std::uint64_t seed = 1;
  EngineParams engine;
  int workers = 1;
  int census_weight_bound_above_m = 16;  // switch census to weight bound 6
  std::filesystem::path output_dir = ".";
};

struct ExperimentResult {
  std::vector<std::filesystem::path> files;  // CSV datasets + manifest
};

/// Fixed 30-bit semiprime, dimension sweep at constant M = dim_max^2;
/// collision rate of the enumerated sr-pair census per dimension.
ExperimentResult run_collision_experiment(const ExperimentConfig& config);

/// Mean sr-pairs per lattice (census) per mapping per bit length, M = m^2.
ExperimentResult run_mapping_experiment(const ExperimentConfig& config);

/// Sweeps-to-optimum and distance improvement on oracle-screened lattices.
ExperimentResult run_refinement_experiment(const ExperimentConfig& config);

/// Lattice instances consumed to factor semiprimes, with the enumeration and
/// collection-rate predictions derived from the same runs.
ExperimentResult run_factoring_experiment(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// SHA-256 of the canonical config serialization, recorded in the manifest.
std::string config_digest(const nlohmann::json& config);

}  // namespace latfact
