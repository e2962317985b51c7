#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "kinetics/periodic_solvers.hpp"

namespace kinetics {

/// Every tunable of a run. Serialized as one flat JSON object whose keys are the
/// field names below; unknown keys are rejected.
struct RunConfig {
  // wall
  double delta = 0.01;
  double period = 1.0;
  std::string wall_shape = "sine";
  double delta_max = WallMotion::default_delta_max;
  // grids
  std::size_t nv = 12;  // velocity nodes per axis
  double vmax = 5.4;
  std::size_t nx = 32;
  std::size_t nt = 64;
  // weight
  double beta = 3.5;
  double q = 0.5;
  // solvers
  double tol_fix = 1e-8;
  double tol_outer = 1e-7;
  std::size_t max_iter = 200;
  double lambda0 = -1.0;
  std::size_t boundary_damping = 0;
  std::size_t max_rungs = 6;
  std::size_t gmres_restart = 40;
  std::size_t design_points = 12;
  std::size_t gamma_stride = 4;
  std::size_t gamma_time_stride = 4;
  // stability
  std::size_t periods = 10;
  double f0_amplitude = 0.1;  // ||w f0|| as a fraction of c_hat delta
  bool mass_fix = true;
  // cycles
  double cycle_t0 = 20.0;
  std::vector<std::size_t> cycle_k{5, 10, 20};
  std::size_t cycle_samples = 1000000;
  // misc
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: runtime default
  std::string suite = "trivial";
  std::string out;
  std::string report;

  SolverSettings solver_settings() const;
  WeightFunction weight() const { return WeightFunction(beta, q); }
  WallMotion wall_motion() const;
  PhaseGrid phase_grid() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Keys absent from `j` keep their defaults. Throws ConfigError on unknown keys or bad types.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
/// Sets one key from its command-line text, typed by the key's default value.
void apply_override(RunConfig& c, const std::string& key, const std::string& text);
/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Worker count: KINETICS_THREADS if set, else the config value (0 keeps the default).
std::size_t effective_threads(const RunConfig& c);

}  // namespace kinetics
