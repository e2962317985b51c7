#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "kinetics/wall_kinematics.hpp"

namespace kinetics {

/// A point (t, x, v) of phase space; the frame is implied by context.
struct PhasePoint {
  double t = 0.0;
  double x = 0.0;
  Velocity v{0.0, 0.0, 0.0};
};

/// Force field affine in position: G(t, x) = offset(t) + slope(t) * x.
/// The transformed wall force has offset 0 and slope -X_w^3 A_w.
class ForceField {
 public:
  using Profile = std::function<double(double)>;

  static ForceField zero();
  static ForceField constant(double g0);
  static ForceField from_clock(const FrameClock& clock);
  ForceField(Profile offset, Profile slope, double period);

  double operator()(double t, double x) const { return offset_(t) + slope_(t) * x; }
  double offset(double t) const { return offset_(t); }
  double slope(double t) const { return slope_(t); }
  /// Period of the profiles; 0 when the field is time independent.
  double period() const { return period_; }
  /// sup over one period (or a unit window) of |G| on x in [0, 1].
  double sup_norm(std::size_t samples = 2048) const;
  /// Same field with the profiles replaced by periodic four-point interpolants
  /// on `samples` nodes per period; cheap to evaluate in Monte-Carlo loops.
  ForceField tabulated(std::size_t samples = 8192) const;

 private:
  Profile offset_;
  Profile slope_;
  double period_;
};

struct TrajectorySample {
  double s;
  double x;
  double v1;
};

enum class Termination { reached_target, exited_left, exited_right, capped };

struct Trajectory {
  PhasePoint start;
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::reached_target;
  PhasePoint end() const;
};

struct ExitData {
  double t_b = 0.0;
  double x_b = 0.0;
  Velocity v_b{0.0, 0.0, 0.0};
  bool capped = false;
};

/// Default RK4 step: one 2048th of the force period (or of a unit window).
double default_ode_step(const ForceField& g);

/// Classical RK4 from p.t to s_target (either direction), stopping at a wall.
Trajectory integrate(const PhasePoint& p, double s_target, const ForceField& g, double h);

/// Backward exit time by RK4 stepping and bisection on the cubic dense output.
ExitData backward_exit(const PhasePoint& p, const ForceField& g, double t_cap, double h);

/// Precomputed flow of the affine characteristic system over one period.
/// Fundamental matrices are produced by the same RK4 step and queried
/// through cubic Hermite dense output, so arbitrary start times cost O(1).
class FlowMap {
 public:
  FlowMap(const ForceField& g, std::size_t steps_per_period = 2048);

  double period() const { return period_; }
  double step() const { return period_ / static_cast<double>(steps_); }
  const ForceField& force() const { return force_; }
  double force_bound() const { return force_bound_; }

  /// (X, V1) at time s of the characteristic through (t, x, v1).
  std::array<double, 2> propagate(double t, double x, double v1, double s) const;

  /// Characteristic through (t, x, v1) with its reference state factored once,
  /// for repeated evaluation along one leg.
  class Path {
   public:
    std::array<double, 2> at(double s) const;

   private:
    friend class FlowMap;
    const FlowMap* flow_ = nullptr;
    double n_ref_ = 0.0;
    Eigen::Vector3d z_;
  };
  Path path(double t, double x, double v1) const;

  /// Backward exit using conservative advancement on the exact flow.
  ExitData backward_exit(const PhasePoint& p, double t_cap) const;

 private:
  using Mat3 = Eigen::Matrix3d;
  Mat3 fundamental_reduced(double r) const;  // Phi(r <- 0), 0 <= r <= period
  const Mat3& monodromy_power(long n) const;

  ForceField force_;
  double period_;
  std::size_t steps_;
  double force_bound_;
  std::vector<Mat3> phi_;   // Phi(k h <- 0), k = 0..steps
  std::vector<Mat3> dphi_;  // A(k h) Phi(k h <- 0)
  static constexpr long power_cache = 64;
  std::vector<Mat3> powers_;  // M^n for |n| <= power_cache
};

/// Max deviation of X(s + P; t + P, x, v) from X(s; t, x, v) over n random
/// interior points (P = force period), together with exit-data shifts.
struct PeriodicityReport {
  double max_state_deviation = 0.0;
  double max_exit_time_deviation = 0.0;
  double max_exit_velocity_deviation = 0.0;
  bool exit_wall_mismatch = false;
};
PeriodicityReport periodicity_check(const ForceField& g, std::size_t n_samples,
                                    std::uint64_t seed, double h);

/// Multiplier sampled along back-time legs (nu_tilde + lambda).
using LegMultiplier = std::function<double(double t, double x, const Velocity& v)>;
/// Velocity weight ratio factor wtilde(v) = 1 / (w sqrt(mu)).
using VelocityWeight = std::function<double(const Velocity& v)>;

struct CycleLeg {
  double t;       // start of the leg (wall time t_l)
  double x;       // wall position x_l
  Velocity v;     // sampled velocity v_l
  Velocity v_end; // V_cl at the end of the leg, time t_{l+1}
  double damping; // exp(-int (nu_tilde + lambda)) over the leg
};

struct Cycle {
  PhasePoint start;
  std::vector<CycleLeg> legs;  // leg 0 is the deterministic exit from start
  bool capped = false;
  std::vector<double> times() const;
};

/// Random source for cycles; one instance per task (seed + task index).
class CycleRng {
 public:
  explicit CycleRng(std::uint64_t seed) : engine_(seed) {}
  /// Velocity drawn from d sigma = sqrt(2 pi) mu |n.v| dv on {n(x_wall).v > 0},
  /// i.e. the half-space whose backward characteristic enters the slab.
  /// Draws with |v1| < 1e-8 are rejected.
  Velocity sample_wall_velocity(double x_wall);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

Cycle sample_cycle(const FlowMap& flow, const PhasePoint& p, std::size_t k, CycleRng& rng,
                   const LegMultiplier& multiplier, double t_cap);

struct CycleMeasureOptions {
  double t0 = 20.0;
  std::vector<std::size_t> ks{5, 10, 20};
  std::size_t samples = 1000000;
  std::uint64_t seed = 12345;
  PhasePoint start{0.0, 0.5, {0.7, 0.2, -0.1}};
  /// Draw the first velocity from d sigma at the wall start.x instead of using start.v.
  bool start_on_wall = false;
  bool damping = true;
  bool weight_ratio = true;
};

struct CycleMeasureEstimate {
  std::size_t k;
  double estimate;
  double standard_error;
};

/// Monte-Carlo estimate of int 1_{t_k > t - T0} d Sigma_{k-1}(t_k) for each k.
/// All k share the same sampled cycles (nested events).
std::vector<CycleMeasureEstimate> cycle_measure_estimate(const FlowMap& flow,
                                                         const CycleMeasureOptions& opt,
                                                         const LegMultiplier& multiplier,
                                                         const VelocityWeight& wtilde);

}  // namespace kinetics
