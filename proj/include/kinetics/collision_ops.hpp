#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kinetics/characteristics.hpp"
#include "kinetics/phase_grid.hpp"

namespace kinetics {

/// Hard-sphere collision frequency nu(|v|) in closed form.
double collision_frequency(double speed);
double collision_frequency(const Velocity& v);

/// Loss and gain parts of the reduced hard-sphere kernel; k = k2 - k1.
double kernel_loss(const Velocity& v, const Velocity& u);
double kernel_gain(const Velocity& v, const Velocity& u);
/// Throws std::domain_error when v == u.
double grad_kernel(const Velocity& v, const Velocity& u);
/// Right-hand side of the pointwise kernel bound without its constant.
double kernel_envelope(const Velocity& v, const Velocity& u);

/// Discretized L = nu - K on a velocity grid.
/// The raw table holds k(v_i, u_j) off the diagonal; each diagonal cell carries the
/// cell integral of k around v_i. The applied operator is made exactly conservative
/// by L_c = (I - P) L_h (I - P) with P the grid-orthogonal projection on invariants.
class CollisionOperator {
 public:
  explicit CollisionOperator(const VelocityGrid& grid, bool conservative = true);

  const VelocityGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::span<const double> nu() const { return nu_; }
  /// Raw symmetric kernel values with zeroed diagonal (no quadrature weight).
  const Eigen::MatrixXd& kernel_table() const { return table_; }
  /// Integral of k(v_i, .) over the cell around v_i.
  std::span<const double> diagonal_correction() const { return diag_; }
  /// Matrix of the applied K (quadrature weights folded in); symmetric.
  const Eigen::MatrixXd& k_matrix() const { return k_; }
  bool conservative() const { return conservative_; }

  void apply_K(std::span<const double> f, std::span<double> out) const;
  void apply_L(std::span<const double> f, std::span<double> out) const;
  /// K applied to each of `rows` contiguous velocity rows (row-major rows x n_v).
  void apply_K_rows(const double* in, double* out, std::size_t rows) const;

  void project_P(std::span<const double> f, std::span<double> out) const;
  void complement_P(std::span<const double> f, std::span<double> out) const;

  /// Weighted sup norm of (nu - K_h) chi_0 for the uncorrected operator.
  double raw_null_defect(const WeightFunction& wf) const;
  /// Same for the applied operator.
  double null_defect(const WeightFunction& wf) const;
  /// L2 operator norm of K estimated by power iteration.
  double k_operator_norm(std::size_t iterations = 200, std::uint64_t seed = 7) const;

 private:
  double defect(const Eigen::MatrixXd& k, const WeightFunction& wf) const;

  VelocityGrid grid_;
  bool conservative_;
  std::vector<double> nu_;
  Eigen::MatrixXd table_;
  std::vector<double> diag_;
  Eigen::MatrixXd k_raw_;
  Eigen::MatrixXd k_;
};

/// Spherical design used for the angular integral in the gain term.
struct SphericalDesign {
  std::vector<Velocity> nodes;  // one node per antipodal pair
  std::vector<double> weights;  // weight of the pair (both signs)
  static SphericalDesign with_points(std::size_t points);  // 12 or 32
};

/// Quadratic collision form Gamma(f, g) = Gamma_+ - Gamma_-, first argument at v:
///   Gamma_+(f, g)(v) = int int |(v-u).w| sqrt(mu(u)) f(v') g(u') dw du
///   Gamma_-(f, g)(v) = f(v) int int |(v-u).w| sqrt(mu(u)) g(u) dw du
/// Both angular integrals use the same design. The gain is evaluated in weak form:
/// each grid pair (v, u) deposits onto nodes around v' with weights reproducing
/// 1, v and |v|^2, so discrete mass, momentum and energy are conserved inside the box.
class CollisionForm {
 public:
  CollisionForm(const VelocityGrid& grid, std::size_t design_points = 12);

  const VelocityGrid& grid() const { return grid_; }
  std::size_t design_points() const { return design_points_; }

  using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// out = Gamma(f, g); blocks are n_v x n_points, row major so each velocity
  /// row is contiguous over points.
  void evaluate(const Block& f, const Block& g, Block& out) const;
  std::vector<double> evaluate(std::span<const double> f, std::span<const double> g) const;

 private:
  struct Stencil {
    std::array<int, 3> base_v;
    std::array<double, 3> frac_v;  // v' = v + base_v + frac_v in grid units
    double coeff;  // |z.w| * weight of the pair * cell volume
  };
  /// One deposit target relative to the source node, all design pairs merged.
  struct Tap {
    std::array<int, 3> offset;
    double weight;
  };
  const Stencil& stencil(int d1, int d2, int d3, std::size_t p) const;
  void deposit_gain(const Block& fh, const Block& gh, Block& gain) const;

  VelocityGrid grid_;
  std::size_t design_points_;
  std::size_t pairs_;
  std::vector<Stencil> stencils_;  // [(d + n - 1) lattice index][pair]
  std::vector<Tap> taps_;              // grouped by lattice index
  std::vector<std::size_t> tap_begin_;  // lattice index -> first tap
  Block loss_;                     // sum_w |(v_i - u_j).w| mu(u_j) dv^3, acting on g / sqrt(mu)
};

/// nu_tilde = nu - G (v1 / 2 + (d w / d v1) / w); with `weighted` false the
/// weight term is dropped (f-form damping).
class ModifiedMultiplier {
 public:
  ModifiedMultiplier(const VelocityGrid& grid, const ForceField& force, const WeightFunction& wf,
                     bool weighted = true);

  double operator()(double t, double x, const Velocity& v) const;
  /// Coefficient c(v) with nu_tilde = nu(v) - G(t, x) c(v), per grid node.
  std::span<const double> force_coefficient() const { return coeff_; }
  std::span<const double> nu() const { return nu_; }
  /// Minimum over the grid, a fine sample of t and x in [0, 1].
  double minimum(std::size_t t_samples = 256, std::size_t x_samples = 17) const;

 private:
  ForceField force_;
  WeightFunction wf_;
  bool weighted_;
  std::vector<double> nu_;
  std::vector<double> coeff_;
};

struct K1BoundReport {
  double fitted_constant = 0.0;  // max ratio |k| / envelope over the sample
  double analytic_constant = 0.0;
  std::size_t pairs = 0;
  bool holds = false;
};
K1BoundReport verify_k1_bound(std::size_t pairs, std::uint64_t seed, double v_range = 6.0);

struct K2BoundReport {
  double max_ratio = 0.0;
  double outer_shell_ratio = 0.0;  // max ratio on the outermost speed shell
  std::vector<double> speeds;
  std::vector<double> ratios;
};
/// Grid quadrature of int |k(v,u) e^{q|v|^2/4 - q|u|^2/4}| (1+|u|)^{-beta} du
/// divided by (1+|v|)^{-1-beta}, at every grid v.
K2BoundReport verify_k2_bound(const VelocityGrid& grid, double q, double beta);

struct CoercivityReport {
  double eigen_floor = 0.0;        // min <Lf,f>/<nu f,f> over range(I - P)
  double random_min_quotient = 0.0;
  std::size_t samples = 0;
};
CoercivityReport coercivity_floor(const CollisionOperator& op, std::size_t samples, std::uint64_t seed);

struct ConservationDefects {
  // |int Gamma chi_i| / int |Gamma chi_i|; momentum and energy use the symmetric part.
  std::array<double, 5> defects{};
  double max() const;
};
ConservationDefects gamma_conservation(const CollisionForm& form, std::span<const double> f,
                                       std::span<const double> g);

/// Smooth random velocity function with ||w f||_inf = 1 (a few Gaussian bumps over w).
std::vector<double> smooth_random_velocity_field(const VelocityGrid& grid, const WeightFunction& wf,
                                                 std::uint64_t seed);

struct GammaBoundReport {
  double fitted_constant = 0.0;
  std::size_t pairs = 0;
};
GammaBoundReport fit_gamma_bound(const CollisionForm& form, const WeightFunction& wf,
                                 std::size_t pairs, std::uint64_t seed);

}  // namespace kinetics
