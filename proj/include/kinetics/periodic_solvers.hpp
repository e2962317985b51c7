#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kinetics/boundary_ops.hpp"
#include "kinetics/characteristics.hpp"
#include "kinetics/collision_ops.hpp"
#include "kinetics/phase_grid.hpp"
#include "kinetics/wall_kinematics.hpp"

namespace kinetics {

struct SolverSettings {
  double tol_fix = 1e-8;    // relative L2 change for the linear ladders
  double tol_outer = 1e-7;  // weighted sup change for the nonlinear iteration
  std::size_t max_iter = 200;
  /// n of the (1 - 1/n) boundary damping; 0 means full P_gamma.
  std::size_t boundary_damping = 0;
  /// Damping used when full P_gamma stalls (sweep ratio >= 0.995).
  std::size_t fallback_damping = 50;
  /// Penalty for the K iteration; negative means ||K|| + 2 measured on the grid.
  double lambda0 = -1.0;
  std::size_t max_rungs = 6;
  std::size_t gmres_restart = 40;
  std::size_t resolvent_samples = 3;  // power steps for the bootstrap constant
};

/// Kernel table and quadratic form for one velocity grid, shared between models.
struct CollisionTables {
  std::shared_ptr<const CollisionOperator> op;
  std::shared_ptr<const CollisionForm> form;
  static CollisionTables build(const VelocityGrid& grid, std::size_t design_points = 12);
};

/// Wall motion, grids and operators of one periodic problem in the fixed frame.
class KineticModel {
 public:
  KineticModel(PhaseGrid grid, const WallMotion& wall, CollisionTables tables,
               WeightFunction wf = {}, std::size_t gamma_stride = 4, std::size_t gamma_time_stride = 4);

  const PhaseGrid& grid() const { return grid_; }
  const VelocityGrid& velocity() const { return grid_.velocity; }
  const SpaceTimeGrid& space_time() const { return grid_.space_time; }
  const FrameClock& clock() const { return clock_; }
  const ForceField& force() const { return force_; }
  const FlowMap& flow() const { return *flow_; }
  const CollisionOperator& collision() const { return *tables_.op; }
  const CollisionForm& collision_form() const { return *tables_.form; }
  const WallQuadrature& quadrature() const { return quad_; }
  const WeightFunction& weight() const { return wf_; }
  double delta() const { return clock_.wall().delta(); }
  std::size_t gamma_stride() const { return stride_; }
  std::size_t gamma_time_stride() const { return time_stride_; }
  /// Slice whose Gamma is used on slice it: the last slice of the preceding
  /// block of gamma_time_stride slices (periodic).
  std::size_t gamma_key(std::size_t it) const;
  /// Discrete mu_bar_w at slice it.
  std::span<const double> wall_maxwellian(std::size_t it) const;

  /// (I - P) Gamma(f, f) of one slice, evaluated on every gamma_stride-th x cell and
  /// interpolated linearly in between.
  void gamma_slice(std::span<const double> f_slice, std::span<double> out) const;
  /// out += G v1 sqrt(mu) on slice it.
  void add_force_source(std::size_t it, std::span<double> out) const;
  /// Frozen nonlinear source: Gamma of the key slice of each it plus the force term.
  DistributionField nonlinear_volume_source(const DistributionField& f) const;
  BoundaryTrace nonlinear_wall_source(const BoundaryTrace& outgoing) const;

 private:
  PhaseGrid grid_;
  FrameClock clock_;
  ForceField force_;
  std::shared_ptr<FlowMap> flow_;
  CollisionTables tables_;
  WallQuadrature quad_;
  WeightFunction wf_;
  std::size_t stride_;
  std::size_t time_stride_;
  std::vector<std::size_t> gamma_cells_;
  std::vector<std::vector<double>> wall_maxwellian_;
};

/// Interior field and wall traces over one period.
struct PeriodicSolution {
  DistributionField f;
  BoundaryTrace outgoing;
  BoundaryTrace incoming;
  static PeriodicSolution zeros(const PhaseGrid& grid);
};

/// What drives one transport step.
struct StepSpec {
  double lambda = 0.0;
  const DistributionField* source = nullptr;  // frozen volume source
  bool collision_K = false;                   // add K f of the previous slice
  bool nonlinear = false;                     // add Gamma and G v1 sqrt(mu); wall source r(f)
  const BoundaryTrace* inflow = nullptr;      // prescribed incoming trace
  double reflection = 1.0;                    // coefficient of P_gamma otherwise
  const BoundaryTrace* wall_source = nullptr; // frozen r added to the reflected trace
  bool mass_fix = false;                      // project each slice to zero mass
};

/// Semi-Lagrangian step between consecutive time slices. Departure points come from
/// the exact affine flow; values are interpolated linearly in x and v1, the
/// multiplier nu - G v1 / 2 + lambda is integrated exactly for a source held at
/// its departure value (exponential Euler). States carry the two wall columns:
/// column 0 is x = 0, columns 1..nx the cells, column nx + 1 is x = 1.
class TransportStepper {
 public:
  explicit TransportStepper(const KineticModel& model);

  const KineticModel& model() const { return model_; }
  std::size_t state_size() const { return (nx_ + 2) * nv_; }

  void step(std::size_t n, std::span<const double> prev, std::span<double> next,
            const StepSpec& spec) const;
  /// March slices 0..nt-1 starting from the state of slice nt-1.
  void march_period(std::span<const double> start, std::span<double> end, const StepSpec& spec,
                    PeriodicSolution* record = nullptr) const;

  std::vector<double> state_of(const PeriodicSolution& s, std::size_t it) const;
  void store(std::span<const double> state, std::size_t it, PeriodicSolution& out) const;
  /// Discrete mass <f, sqrt(mu)>_{x,v} of the interior part of a state.
  double state_mass(std::span<const double> state) const;
  /// Largest removed mass over all mass-fixed steps since construction.
  double max_mass_correction() const { return max_mass_correction_; }
  void reset_mass_correction() const { max_mass_correction_ = 0.0; }

 private:
  struct Departure {
    bool used = false;
    bool exits = false;
    int wall = 0;
    double tau = 0.0;
    std::size_t col = 0;  // left column of the x bracket
    double wx = 0.0;
    std::size_t j0 = 0;   // lower v1 node of the bracket
    double wv = 0.0;
  };
  const Departure& departure(std::size_t n, std::size_t c, std::size_t i1) const {
    return geometry_[(n * (nx_ + 2) + c) * per_axis_ + i1];
  }
  double transport_value(std::size_t n, std::size_t c, std::size_t i, double lambda,
                         std::span<const double> prev, std::span<const double> next,
                         const double* src) const;
  void build_source(std::size_t n, std::span<const double> prev, const StepSpec& spec,
                    std::vector<double>& src) const;
  void incoming(std::size_t n, const StepSpec& spec, std::span<double> next) const;

  const KineticModel& model_;
  std::size_t nx_, nt_, nv_, per_axis_;
  double dt_;
  std::vector<Departure> geometry_;
  std::vector<double> exponent_;  // integral of nu - G v1 / 2 along each step
  mutable double max_mass_correction_ = 0.0;
  mutable std::vector<double> gamma_cache_;  // Gamma of the last key slice passed
  mutable std::size_t gamma_cache_slice_ = static_cast<std::size_t>(-1);
};

struct SweepReport {
  std::size_t sweeps = 0;
  double final_change = 0.0;
  bool converged = false;
  double reflection = 1.0;
};

/// Periodic solve with a prescribed incoming trace, by repeated sweeps over a period.
PeriodicSolution inflow_periodic_solve(const TransportStepper& stepper, const DistributionField* g,
                                       const BoundaryTrace& inflow, double lambda,
                                       const SolverSettings& settings, SweepReport* report = nullptr);

/// Periodic solve of the penalised transport problem with full (or damped) P_gamma
/// coupling inside each sweep and no K.
PeriodicSolution transport_solve(const TransportStepper& stepper, const DistributionField* h,
                                 const BoundaryTrace* r, double lambda,
                                 const SolverSettings& settings, SweepReport* report = nullptr,
                                 const std::vector<double>* warm_state = nullptr);

struct BoundaryIterationReport {
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> residuals;        // relative L2 change per iteration
  std::vector<double> boundary_ratios;  // |f^{i+1}-f^i|_{L2+} / |f^i-f^{i-1}|_{L2+}
  std::vector<double> boundary_norms;   // |f^i|_{L2+}
  double predicted_factor = 1.0;        // sqrt(1 - 2/n + 3/(2 n^2))
  double max_ratio() const;
};
/// Iteration f^{i+1}|_{gamma_-} = (1 - 1/n) P_gamma f^i + r with penalty lambda and no K.
PeriodicSolution boundary_fixed_point(const TransportStepper& stepper, const DistributionField* g,
                                      const BoundaryTrace* r, double lambda, std::size_t damping,
                                      const SolverSettings& settings,
                                      BoundaryIterationReport* report = nullptr);

/// ||K||_2 + 2 with ||K|| from power iteration on the kernel matrix.
double measured_lambda0(const CollisionOperator& op);

struct KIterationReport {
  double lambda = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> energy_ratios;  // int ||z^{m+1}||^2 / int ||z^m||^2
  std::vector<double> residuals;
  double max_energy_ratio() const;
};
/// f^{m+1} = S_lambda^{-1}(K f^m + g) with S_lambda the penalised transport solve.
PeriodicSolution k_fixed_point(const TransportStepper& stepper, const DistributionField* g,
                               const BoundaryTrace* r, double lambda, const SolverSettings& settings,
                               KIterationReport* report = nullptr);

struct LinearSolveInfo {
  double lambda = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // relative periodicity residual of the shooting system
  bool converged = false;
};
/// Periodic solve of the full linear problem (transport, P_gamma, K, penalty lambda) by
/// GMRES on the one-period shooting map. With zero_mass every slice is kept on the
/// zero-mass hyperplane.
PeriodicSolution periodic_linear_solve(const TransportStepper& stepper, const DistributionField* g,
                                       const BoundaryTrace* r, double lambda, bool zero_mass,
                                       const SolverSettings& settings, LinearSolveInfo* info = nullptr,
                                       const std::vector<double>* warm_state = nullptr);

struct RungRecord {
  double lambda = 0.0;
  double step = 0.0;
  double contraction = 0.0;  // resolvent bound times the step
  LinearSolveInfo solve;
};
struct BootstrapReport {
  double lambda0 = 0.0;
  double resolvent_bound = 0.0;  // measured ||S_{lambda0}^{-1}|| in L2(t, x, v)
  bool schedule_capped = false;  // true when max_rungs forced steps above 1 / (2 C)
  std::vector<RungRecord> rungs;
  double max_slice_mass = 0.0;
};
/// Continuation lambda0 -> 0 for the zero-mass linear problem.
PeriodicSolution lambda_bootstrap(const TransportStepper& stepper, const DistributionField* g,
                                  const BoundaryTrace* r, const SolverSettings& settings,
                                  BootstrapReport* report = nullptr);

struct OuterRecord {
  std::size_t iteration = 0;
  double change = 0.0;         // weighted sup of f^{j+1} - f^j
  double weighted_sup = 0.0;   // ||w f^{j+1}||_inf
  double boundary_sup = 0.0;   // |w f^{j+1}|_{inf, +-}
  std::size_t linear_iterations = 0;
  double linear_residual = 0.0;
};
struct SolverReport {
  std::vector<OuterRecord> outer;
  BootstrapReport bootstrap;
  bool converged = false;
  double c_hat = 0.0;           // ||w f_per||_inf / delta
  bool stayed_in_ball = true;   // ||w f^j|| <= 2 c_hat delta for all j
  double max_slice_mass = 0.0;
  double source_mass = 0.0;     // max over slices of |int int G v1 mu|
};
struct SteadyResult {
  PeriodicSolution solution;
  SolverReport report;
};
/// Outer iteration f^{j+1} = linear_solve(Gamma(f^j, f^j) + G v1 sqrt(mu), r(f^j)).
SteadyResult nonlinear_periodic_solve(const KineticModel& model, const SolverSettings& settings);

/// F = mu + sqrt(mu) f.
DistributionField to_F(const VelocityGrid& grid, const DistributionField& f);

struct PeriodicResidual {
  double l2 = 0.0;   // max over slices of ||a(t) - b(t)||_{L2}
  double sup = 0.0;
};
/// Slice-wise distance between two fields sampled one period apart.
PeriodicResidual periodic_residual(const PhaseGrid& grid, const DistributionField& a,
                                   const DistributionField& b);

struct IterationLemmaResult {
  bool hypothesis = true;   // a_{i+1+k} <= max(a_i..a_{i+k}) / 8 + D for all i
  bool conclusion = true;   // A_i^k within the bound for i >= k + 1
  std::vector<double> bound;
};
IterationLemmaResult iteration_lemma_check(std::span<const double> a, std::size_t k, double D);

}  // namespace kinetics
