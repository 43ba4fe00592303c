#pragma once

// Synthetic shell-implosion ensemble and the simulation file formats.
//
// The generator is a desk-scale stand-in for a hydrodynamics code. Its
// functional forms are arbitrary; what matters is the structure they
// produce across the ensemble:
//   * the shock radius grows as r0 + v(cs) t, so cs dominates delta-shock;
//   * mgrg scales the density by (1 + 0.001 level) and is nearly invisible;
//   * profile reshapes the compressed region behind the shock without moving
//     the shock or edge, so similar features can hide different densities;
//   * s1 and s2 perturb the edge (modes 2 and 4) and, weakly, the shock.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "simsel/core.hpp"

namespace simsel {

struct EnsembleConfig {
  CylGrid grid{64, 64, 0.05, 0.05};
  LevelCounts levels{3, 3, 3, 2, 2, 2, 1};
  int time_steps = kDefaultTimeSteps;
  int n_theta = 64;
  int n_modes = 9;
  std::uint64_t seed = 0;

  std::size_t ensemble_size() const;
};

// Largest level count the generator has forms for, per parameter.
inline constexpr LevelCounts kMaxGeneratorLevels{3, 3, 3, 4, 2, 4, 4};

void validate(const EnsembleConfig& config);

// key = value text; unknown keys are rejected. Keys: n_r, n_z, d_r, d_z,
// levels (comma list of 7), time_steps, n_theta, n_modes, seed.
EnsembleConfig parse_ensemble_config(const std::string& text);
EnsembleConfig load_ensemble_config(const std::filesystem::path& path);

// Full-factorial enumeration, profile varying slowest. Index 0 is the
// all-zero-level simulation.
ParamLevels params_for_index(const EnsembleConfig& config, std::size_t index);

// Everything needed to evaluate one simulation.
struct SimulationModel {
  ParamLevels params{};
  double edge_jitter = 0.0;  // seeded per-simulation mode-3 edge amplitude (cm)
};

SimulationModel make_model(const EnsembleConfig& config, std::size_t index);

// Shock radius of the unperturbed shell at time step t (cm).
double shock_radius(const ParamLevels& params, int t);

// Throws kInvalidTimeStep for t outside [1, T], kInvalidLevel for levels
// outside the config or generator range.
DensityField density_at(const SimulationModel& model, int t,
                        const EnsembleConfig& config);
FeatureSet features_at(const SimulationModel& model, int t,
                       const EnsembleConfig& config);

/// Writes every simulation's density and feature files plus manifest.json
/// under out_dir. Output depends only on (config, seed), not on jobs.
std::vector<SimulationRecord> generate_ensemble(
    const EnsembleConfig& config, const std::filesystem::path& out_dir,
    int jobs = 1);

// Density file: one text line "n_r n_z d_r d_z\n" followed by n_r*n_z
// little-endian IEEE-754 doubles, row-major.
void write_density(const DensityField& field, const std::filesystem::path& path);
DensityField read_density(const std::filesystem::path& path);

// Feature file: per time step, a shock line then an edge line, each a
// space-separated list of decimal coefficients.
void write_features(const std::vector<FeatureSet>& per_step,
                    const std::filesystem::path& path);
std::vector<FeatureSet> read_features(const std::filesystem::path& path);

struct Manifest {
  EnsembleConfig config;
  std::vector<SimulationRecord> simulations;  // paths resolved to absolute
};

void write_manifest(const EnsembleConfig& config,
                    const std::vector<SimulationRecord>& records,
                    const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace simsel
