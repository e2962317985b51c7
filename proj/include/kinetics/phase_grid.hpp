#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kinetics/wall_kinematics.hpp"

namespace kinetics {

/// w(v) = (1 + |v|^2)^{beta/2} exp(q |v|^2 / 4).
struct WeightFunction {
  double beta = 3.5;
  double q = 0.5;

  WeightFunction() = default;
  WeightFunction(double beta_, double q_);

  double operator()(const Velocity& v) const;
  double of_speed_squared(double s2) const;
  /// (d w / d v1) / w.
  double log_derivative_v1(const Velocity& v) const;
};

/// Cell-centred Cartesian grid on [-v_max, v_max]^3 with midpoint weights.
/// Node index = i1 + n (i2 + n i3), so v1 is the fastest axis.
class VelocityGrid {
 public:
  VelocityGrid(double v_max, std::size_t n_per_axis);

  std::size_t size() const { return nodes_.size(); }
  std::size_t per_axis() const { return n_; }
  double v_max() const { return v_max_; }
  double spacing() const { return dv_; }
  double cell_volume() const { return dv_ * dv_ * dv_; }
  double axis(std::size_t j) const { return -v_max_ + (static_cast<double>(j) + 0.5) * dv_; }

  const Velocity& node(std::size_t i) const { return nodes_[i]; }
  std::size_t index(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return i1 + n_ * (i2 + n_ * i3);
  }
  std::size_t axis_index(std::size_t i, int component) const;
  /// Index of -v (all three components flipped).
  std::size_t reflected(std::size_t i) const;

  std::span<const double> mu() const { return mu_; }
  std::span<const double> sqrt_mu() const { return sqrt_mu_; }
  double weight() const { return cell_volume(); }

  /// Quadrature of mu over the box; its distance from 1 is the truncation report.
  double maxwellian_mass() const;
  /// Orthonormal collision invariants under the grid inner product, columns of an n_v x 5 matrix.
  const Eigen::MatrixXd& invariants() const { return chi_orth_; }
  /// Gram matrix of the analytic (chi_0 ... chi_4) under grid quadrature.
  Eigen::Matrix<double, 5, 5> gram() const;
  /// Analytic chi_i at node j.
  double chi(std::size_t i, std::size_t j) const;

 private:
  double v_max_;
  std::size_t n_;
  double dv_;
  std::vector<Velocity> nodes_;
  std::vector<double> mu_;
  std::vector<double> sqrt_mu_;
  Eigen::MatrixXd chi_orth_;
};

/// n_x cell centres on [0, 1]; n_t slices on [0, period) with periodic wraparound.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(std::size_t n_x, std::size_t n_t, double period);

  std::size_t nx() const { return n_x_; }
  std::size_t nt() const { return n_t_; }
  double period() const { return period_; }
  double dx() const { return 1.0 / static_cast<double>(n_x_); }
  double dt() const { return period_ / static_cast<double>(n_t_); }
  double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
  double t(std::size_t n) const { return static_cast<double>(n) * dt(); }
  std::size_t wrap(long n) const;

 private:
  std::size_t n_x_;
  std::size_t n_t_;
  double period_;
};

enum class Frame { fixed, moving };
enum class Normalization { f, h, F };

std::string to_string(Frame f);
std::string to_string(Normalization n);

/// Values f[i_t][i_x][i_v] over one period.
class DistributionField {
 public:
  DistributionField() = default;
  DistributionField(std::size_t n_t, std::size_t n_x, std::size_t n_v, double value = 0.0);

  std::size_t nt() const { return n_t_; }
  std::size_t nx() const { return n_x_; }
  std::size_t nv() const { return n_v_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t it, std::size_t ix, std::size_t iv) {
    return data_[(it * n_x_ + ix) * n_v_ + iv];
  }
  double at(std::size_t it, std::size_t ix, std::size_t iv) const {
    return data_[(it * n_x_ + ix) * n_v_ + iv];
  }
  std::span<double> row(std::size_t it, std::size_t ix) {
    return {data_.data() + (it * n_x_ + ix) * n_v_, n_v_};
  }
  std::span<const double> row(std::size_t it, std::size_t ix) const {
    return {data_.data() + (it * n_x_ + ix) * n_v_, n_v_};
  }
  std::span<double> slice(std::size_t it) { return {data_.data() + it * n_x_ * n_v_, n_x_ * n_v_}; }
  std::span<const double> slice(std::size_t it) const {
    return {data_.data() + it * n_x_ * n_v_, n_x_ * n_v_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Frame frame = Frame::fixed;
  Normalization normalization = Normalization::f;

  bool same_shape(const DistributionField& o) const {
    return n_t_ == o.n_t_ && n_x_ == o.n_x_ && n_v_ == o.n_v_;
  }
  void fill(double v);
  /// this += a * other
  void axpy(double a, const DistributionField& other);
  void scale(double a);

 private:
  std::size_t n_t_ = 0, n_x_ = 0, n_v_ = 0;
  std::vector<double> data_;
};

enum class TraceSide { outgoing, incoming };  // gamma_+ and gamma_-

/// Wall traces per time slice: values[it][wall][iv]; wall 0 is x = 0.
/// Only nodes on the trace side are meaningful.
class BoundaryTrace {
 public:
  BoundaryTrace() = default;
  BoundaryTrace(std::size_t n_t, std::size_t n_v, TraceSide side);

  std::size_t nt() const { return n_t_; }
  std::size_t nv() const { return n_v_; }
  TraceSide side() const { return side_; }

  double& at(std::size_t it, int wall, std::size_t iv) {
    return data_[(it * 2 + static_cast<std::size_t>(wall)) * n_v_ + iv];
  }
  double at(std::size_t it, int wall, std::size_t iv) const {
    return data_[(it * 2 + static_cast<std::size_t>(wall)) * n_v_ + iv];
  }
  std::span<double> wall(std::size_t it, int wall) {
    return {data_.data() + (it * 2 + static_cast<std::size_t>(wall)) * n_v_, n_v_};
  }
  std::span<const double> wall(std::size_t it, int wall) const {
    return {data_.data() + (it * 2 + static_cast<std::size_t>(wall)) * n_v_, n_v_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  void fill(double v);

 private:
  std::size_t n_t_ = 0, n_v_ = 0;
  TraceSide side_ = TraceSide::outgoing;
  std::vector<double> data_;
};

/// Outward normal component n(x).e1 at wall 0 (x = 0) or wall 1 (x = 1).
inline double outward_normal(int wall) { return wall == 0 ? -1.0 : 1.0; }
/// True when v1 lies on the given side of the trace at that wall.
inline bool on_side(double v1, int wall, TraceSide side) {
  const double nv = outward_normal(wall) * v1;
  return side == TraceSide::outgoing ? nv > 0.0 : nv < 0.0;
}

struct PhaseGrid {
  VelocityGrid velocity;
  SpaceTimeGrid space_time;

  DistributionField make_field(double value = 0.0) const {
    return DistributionField(space_time.nt(), space_time.nx(), velocity.size(), value);
  }
  BoundaryTrace make_trace(TraceSide side) const {
    return BoundaryTrace(space_time.nt(), velocity.size(), side);
  }
};

double weight(const WeightFunction& wf, const Velocity& v);

/// Time-averaged L^2_{x,v} norm: sqrt(mean_t int int f^2).
double norm_l2(const PhaseGrid& grid, const DistributionField& f);
/// L^2_{x,v} norm of one slice.
double slice_norm_l2(const PhaseGrid& grid, const DistributionField& f, std::size_t it);
double norm_weighted_sup(const PhaseGrid& grid, const DistributionField& f, const WeightFunction& wf);
/// Time-averaged sqrt(sum_walls int_{side} f^2 |v1| dv).
double norm_boundary_l2pm(const VelocityGrid& vg, const BoundaryTrace& trace);
double norm_boundary_suppm(const VelocityGrid& vg, const BoundaryTrace& trace,
                           const WeightFunction& wf);

struct Moments {
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};
/// Quadrature of f against chi_0 ... chi_4.
Moments moments(const VelocityGrid& vg, std::span<const double> f);
/// <f(t), sqrt(mu)>_{x,v} for each slice.
std::vector<double> slice_mass(const PhaseGrid& grid, const DistributionField& f);

struct SnapshotHeader {
  std::array<std::size_t, 3> dims{0, 0, 0};
  double v_max = 0.0;
  double beta = 0.0;
  double q = 0.0;
  Frame frame = Frame::fixed;
  Normalization normalization = Normalization::f;
};

/// Single-line JSON header then little-endian float64 values in (t, x, v) order.
void write_snapshot(const std::string& path, const DistributionField& f, double v_max,
                    const WeightFunction& wf);
DistributionField read_snapshot(const std::string& path, SnapshotHeader* header = nullptr);

}  // namespace kinetics
