#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinetics {

/// Raised for invalid user-supplied parameters (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Velocity = std::array<double, 3>;

/// Smooth 1-periodic wall profile s(phase) together with s' and s''.
class WallShape {
 public:
  enum class Kind { sine, cosine, table };

  static WallShape sine();
  static WallShape cosine();
  /// Trigonometric interpolant through equally spaced samples of one period.
  static WallShape from_table(std::vector<double> samples);
  static WallShape from_name(const std::string& name);

  Kind kind() const { return kind_; }
  std::string name() const;

  double value(double phase) const;
  double slope(double phase) const;
  double curvature(double phase) const;

 private:
  explicit WallShape(Kind kind) : kind_(kind) {}

  // Real Fourier coefficients for the table shape: s = a0 + sum a_k cos + b_k sin.
  double evaluate_series(double phase, int derivative) const;

  Kind kind_;
  double a0_ = 0.0;
  std::vector<double> cos_coeff_;
  std::vector<double> sin_coeff_;
};

struct WallState {
  double position;
  double velocity;
  double acceleration;
};

/// X_w(t) = 1 + delta * s(t / T) with analytic derivatives.
class WallMotion {
 public:
  static constexpr double default_delta_max = 0.5;

  WallMotion(double delta, double period, WallShape shape = WallShape::sine(),
             double delta_max = default_delta_max);

  double delta() const { return delta_; }
  double period() const { return period_; }
  const WallShape& shape() const { return shape_; }

  WallState state(double t) const;
  double position(double t) const { return state(t).position; }

  /// sup|X_w - 1| + sup|V_w| + sup|A_w| over a dense sample of one period.
  double c2_norm(std::size_t samples = 4096) const;
  double max_abs_velocity(std::size_t samples = 4096) const;
  double max_abs_acceleration(std::size_t samples = 4096) const;
  double max_position(std::size_t samples = 4096) const;

  /// Phase t/T reduced to [0, 1) and snapped to a 2^-36 lattice so that
  /// state(t + T) == state(t) bitwise.
  double reduced_phase(double t) const;

 private:
  double delta_;
  double period_;
  WallShape shape_;
};

/// Monotone map t -> tbar = int_0^t X_w^{-2} and its inverse.
class FrameClock {
 public:
  explicit FrameClock(const WallMotion& wall, std::size_t panels = 256);

  double forward(double t) const;
  double inverse(double tbar) const;

  double period() const { return period_; }
  double transformed_period() const { return tbar_period_; }
  std::size_t panels() const { return panel_t_.size() - 1; }
  /// Table of (t, tbar) at panel boundaries over one period.
  const std::vector<double>& table_t() const { return panel_t_; }
  const std::vector<double>& table_tbar() const { return panel_tbar_; }

  /// Wall state expressed in transformed time.
  WallState wall_state_at(double tbar) const { return wall_.state(inverse(tbar)); }
  const WallMotion& wall() const { return wall_; }

 private:
  double partial(std::size_t panel, double t_local) const;

  WallMotion wall_;
  double period_;
  double tbar_period_;
  std::vector<double> panel_t_;
  std::vector<double> panel_tbar_;
};

/// G(tbar, xbar) = -xbar * X_w^3 * A_w(t(tbar)).
double force(const FrameClock& clock, double tbar, double xbar);

/// dG/dxbar = -X_w^3 A_w(t(tbar)); G is linear in xbar.
double force_slope(const FrameClock& clock, double tbar);

double maxwellian(const Velocity& v);
double maxwellian(double speed_squared);
double wall_maxwellian_moving(const WallMotion& wall, double t, const Velocity& v);
double wall_maxwellian_fixed(const FrameClock& clock, double tbar, const Velocity& vbar);
/// Same density with the wall position supplied directly.
double wall_maxwellian_fixed_at(double wall_position, const Velocity& vbar);
double local_maxwellian(const WallMotion& wall, double t, double x, const Velocity& v);

}  // namespace kinetics
