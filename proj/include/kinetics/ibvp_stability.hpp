#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kinetics/periodic_solvers.hpp"

namespace kinetics {

struct SliceRecord {
  double t = 0.0;
  double l2 = 0.0;            // ||f(t)||_{L2(x,v)} of the perturbation
  double weighted_sup = 0.0;  // ||w f(t)||_inf
  double mass = 0.0;          // <f(t), sqrt(mu)>
  double total_mass = 0.0;    // int int F(t)
  double min_F = 0.0;         // min of mu + sqrt(mu)(f_per + f), diagnostics only
};

struct MarchOptions {
  bool mass_fix = true;          // keep every slice on the zero-mass hyperplane
  double blowup_factor = 10.0;   // abort once ||w f|| exceeds this times the initial value
};

struct StabilityRun {
  std::size_t periods = 0;       // requested
  std::size_t completed = 0;     // full periods marched
  double period = 0.0;
  double initial_weighted_sup = 0.0;
  std::vector<SliceRecord> history;
  std::vector<double> period_distance;  // max over a period of ||F(t + k T) - F_per(t)||_{L2}
  bool blew_up = false;
  double max_mass_correction = 0.0;     // largest mass removed by the projection
  std::vector<double> final_state;      // perturbation at the last slice, nx * nv
};

/// March f_per + f over whole periods and record the perturbation f. The initial
/// perturbation `f0` (nx * nv values) sits at the last slice of the period before t = 0.
StabilityRun ibvp_march(const KineticModel& model, const PeriodicSolution& f_per,
                        std::span<const double> f0, std::size_t periods,
                        const MarchOptions& options = {});

/// kappa (I - P)(Gaussian bump in x and v) with ||w f0||_inf = target.
std::vector<double> default_initial_perturbation(const KineticModel& model, double target,
                                                 std::uint64_t seed);

struct DecayFit {
  double rate = 0.0;        // lambda_1 from log ||w f|| ~ intercept - rate t
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  bool monotone_tail = false;
  double envelope = 0.0;    // C with ||w f(t)|| <= C e^{-rate t} ||w f0|| on the tail
  bool accepted = false;
  std::string reason;
};
/// Least squares over samples with t in the last `tail` fraction of the history.
/// Monotonicity is judged on per-period maxima, which removes the periodic modulation;
/// period k holds the samples with t - origin in (k T, (k + 1) T]. NaN origin means t.front().
DecayFit decay_rate_fit(std::span<const double> t, std::span<const double> values, double period,
                        double tail = 0.5, double initial = 0.0,
                        double origin = std::numeric_limits<double>::quiet_NaN());
DecayFit decay_rate_fit(const StabilityRun& run, double tail = 0.5);

struct PositivityReport {
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t it = 0, ix = 0, iv = 0;
  Velocity velocity{0.0, 0.0, 0.0};
  bool pass = false;
};
/// Minimum of an F-level field; passes iff min >= -1e-10 max.
PositivityReport positivity_check(const VelocityGrid& grid, const DistributionField& F);

struct MassDrift {
  double initial_mass = 0.0;
  std::vector<double> period_mass;   // int int F at the end of each period
  std::vector<double> drift;         // |M_k - M_{k-1}| / M_0
  double max_drift = 0.0;
};
/// Unprojected nonlinear march of the full F starting from F = mu + sqrt(mu) f_start
/// (f_start = 0 when empty).
MassDrift mass_conservation_check(const KineticModel& model, std::size_t periods,
                                  std::span<const double> f_start = {});

/// Per-slice CSV: t, l2, weighted_sup, mass, min_F.
void write_stability_csv(const std::string& path, const StabilityRun& run);

}  // namespace kinetics
