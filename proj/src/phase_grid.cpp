#include "kinetics/phase_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace kinetics {

WeightFunction::WeightFunction(double beta_, double q_) : beta(beta_), q(q_) {
  if (!(beta > 3.0)) throw ConfigError("weight exponent beta must exceed 3");
  if (!(q >= 0.0 && q < 1.0)) throw ConfigError("weight parameter q must lie in [0, 1)");
}

double WeightFunction::of_speed_squared(double s2) const {
  return std::pow(1.0 + s2, 0.5 * beta) * std::exp(0.25 * q * s2);
}

double WeightFunction::operator()(const Velocity& v) const {
  return of_speed_squared(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double WeightFunction::log_derivative_v1(const Velocity& v) const {
  const double s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  return beta * v[0] / (1.0 + s2) + 0.5 * q * v[0];
}

double weight(const WeightFunction& wf, const Velocity& v) { return wf(v); }

VelocityGrid::VelocityGrid(double v_max, std::size_t n_per_axis)
    : v_max_(v_max), n_(n_per_axis), dv_(0.0) {
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  if (n_per_axis < 2 || n_per_axis % 2 != 0)
    throw ConfigError("velocity points per axis must be even and at least 2");
  dv_ = 2.0 * v_max / static_cast<double>(n_);
  const std::size_t total = n_ * n_ * n_;
  nodes_.resize(total);
  mu_.resize(total);
  sqrt_mu_.resize(total);
  for (std::size_t i3 = 0; i3 < n_; ++i3)
    for (std::size_t i2 = 0; i2 < n_; ++i2)
      for (std::size_t i1 = 0; i1 < n_; ++i1) {
        const std::size_t i = index(i1, i2, i3);
        nodes_[i] = {axis(i1), axis(i2), axis(i3)};
        mu_[i] = maxwellian(nodes_[i]);
        sqrt_mu_[i] = std::sqrt(mu_[i]);
      }

  // Modified Gram-Schmidt (two passes) under the midpoint inner product.
  const double w = cell_volume();
  chi_orth_.resize(static_cast<Eigen::Index>(total), 5);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t j = 0; j < total; ++j) chi_orth_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = chi(c, j);
  for (Eigen::Index c = 0; c < 5; ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index d = 0; d < c; ++d) {
        const double proj = w * chi_orth_.col(d).dot(chi_orth_.col(c));
        chi_orth_.col(c) -= proj * chi_orth_.col(d);
      }
    chi_orth_.col(c) /= std::sqrt(w * chi_orth_.col(c).squaredNorm());
  }
}

std::size_t VelocityGrid::axis_index(std::size_t i, int component) const {
  switch (component) {
    case 0: return i % n_;
    case 1: return (i / n_) % n_;
    default: return i / (n_ * n_);
  }
}

std::size_t VelocityGrid::reflected(std::size_t i) const {
  return index(n_ - 1 - axis_index(i, 0), n_ - 1 - axis_index(i, 1), n_ - 1 - axis_index(i, 2));
}

double VelocityGrid::maxwellian_mass() const {
  double s = 0.0;
  for (double m : mu_) s += m;
  return s * cell_volume();
}

double VelocityGrid::chi(std::size_t i, std::size_t j) const {
  const Velocity& v = nodes_[j];
  const double sm = sqrt_mu_[j];
  switch (i) {
    case 0: return sm;
    case 1: return v[0] * sm;
    case 2: return v[1] * sm;
    case 3: return v[2] * sm;
    default: {
      const double s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
      return (s2 - 3.0) / std::sqrt(6.0) * sm;
    }
  }
}

Eigen::Matrix<double, 5, 5> VelocityGrid::gram() const {
  Eigen::Matrix<double, 5, 5> g = Eigen::Matrix<double, 5, 5>::Zero();
  for (std::size_t j = 0; j < size(); ++j)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b <= a; ++b) g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += chi(a, j) * chi(b, j);
  g *= cell_volume();
  return g.selfadjointView<Eigen::Lower>();
}

SpaceTimeGrid::SpaceTimeGrid(std::size_t n_x, std::size_t n_t, double period)
    : n_x_(n_x), n_t_(n_t), period_(period) {
  if (n_x < 2) throw ConfigError("n_x must be at least 2");
  if (n_t < 2) throw ConfigError("n_t must be at least 2");
  if (!(period > 0.0)) throw ConfigError("time period must be positive");
}

std::size_t SpaceTimeGrid::wrap(long n) const {
  const long m = static_cast<long>(n_t_);
  return static_cast<std::size_t>(((n % m) + m) % m);
}

std::string to_string(Frame f) { return f == Frame::fixed ? "fixed" : "moving"; }

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::f: return "f";
    case Normalization::h: return "h";
    default: return "F";
  }
}

DistributionField::DistributionField(std::size_t n_t, std::size_t n_x, std::size_t n_v, double value)
    : n_t_(n_t), n_x_(n_x), n_v_(n_v), data_(n_t * n_x * n_v, value) {}

void DistributionField::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void DistributionField::axpy(double a, const DistributionField& other) {
  if (!same_shape(other)) throw std::invalid_argument("axpy: field shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * other.data_[i];
}

void DistributionField::scale(double a) {
  for (double& x : data_) x *= a;
}

BoundaryTrace::BoundaryTrace(std::size_t n_t, std::size_t n_v, TraceSide side)
    : n_t_(n_t), n_v_(n_v), side_(side), data_(n_t * 2 * n_v, 0.0) {}

void BoundaryTrace::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double slice_norm_l2(const PhaseGrid& grid, const DistributionField& f, std::size_t it) {
  double s = 0.0;
  for (double x : f.slice(it)) s += x * x;
  return std::sqrt(s * grid.velocity.cell_volume() * grid.space_time.dx());
}

double norm_l2(const PhaseGrid& grid, const DistributionField& f) {
  double s = 0.0;
  for (double x : f.values()) s += x * x;
  s *= grid.velocity.cell_volume() * grid.space_time.dx() / static_cast<double>(f.nt());
  return std::sqrt(s);
}

double norm_weighted_sup(const PhaseGrid& grid, const DistributionField& f, const WeightFunction& wf) {
  const auto& vg = grid.velocity;
  std::vector<double> w(vg.size());
  for (std::size_t j = 0; j < vg.size(); ++j) w[j] = wf(vg.node(j));
  double m = 0.0;
  for (std::size_t it = 0; it < f.nt(); ++it)
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      const auto r = f.row(it, ix);
      for (std::size_t j = 0; j < r.size(); ++j) m = std::max(m, w[j] * std::abs(r[j]));
    }
  return m;
}

double norm_boundary_l2pm(const VelocityGrid& vg, const BoundaryTrace& trace) {
  double s = 0.0;
  for (std::size_t it = 0; it < trace.nt(); ++it)
    for (int wall = 0; wall < 2; ++wall) {
      const auto r = trace.wall(it, wall);
      for (std::size_t j = 0; j < vg.size(); ++j) {
        const double v1 = vg.node(j)[0];
        if (on_side(v1, wall, trace.side())) s += r[j] * r[j] * std::abs(v1);
      }
    }
  return std::sqrt(s * vg.cell_volume() / static_cast<double>(trace.nt()));
}

double norm_boundary_suppm(const VelocityGrid& vg, const BoundaryTrace& trace, const WeightFunction& wf) {
  double m = 0.0;
  for (std::size_t it = 0; it < trace.nt(); ++it)
    for (int wall = 0; wall < 2; ++wall) {
      const auto r = trace.wall(it, wall);
      for (std::size_t j = 0; j < vg.size(); ++j)
        if (on_side(vg.node(j)[0], wall, trace.side())) m = std::max(m, wf(vg.node(j)) * std::abs(r[j]));
    }
  return m;
}

Moments moments(const VelocityGrid& vg, std::span<const double> f) {
  Moments m;
  for (std::size_t j = 0; j < vg.size(); ++j) {
    m.mass += f[j] * vg.chi(0, j);
    for (std::size_t c = 0; c < 3; ++c) m.momentum[c] += f[j] * vg.chi(c + 1, j);
    m.energy += f[j] * vg.chi(4, j);
  }
  const double w = vg.cell_volume();
  m.mass *= w;
  for (double& p : m.momentum) p *= w;
  m.energy *= w;
  return m;
}

std::vector<double> slice_mass(const PhaseGrid& grid, const DistributionField& f) {
  const auto sm = grid.velocity.sqrt_mu();
  std::vector<double> out(f.nt(), 0.0);
  for (std::size_t it = 0; it < f.nt(); ++it) {
    double s = 0.0;
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      const auto r = f.row(it, ix);
      for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * sm[j];
    }
    out[it] = s * grid.velocity.cell_volume() * grid.space_time.dx();
  }
  return out;
}

namespace {

Normalization parse_normalization(const std::string& s) {
  if (s == "f") return Normalization::f;
  if (s == "h") return Normalization::h;
  if (s == "F") return Normalization::F;
  throw std::runtime_error("snapshot: unknown normalization " + s);
}

}  // namespace

void write_snapshot(const std::string& path, const DistributionField& f, double v_max,
                    const WeightFunction& wf) {
  nlohmann::json header = {
      {"dims", {f.nt(), f.nx(), f.nv()}},
      {"v_max", v_max},
      {"beta", wf.beta},
      {"q", wf.q},
      {"frame", to_string(f.frame)},
      {"normalization", to_string(f.normalization)},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  out << header.dump() << '\n';
  static_assert(std::endian::native == std::endian::little, "snapshot writer assumes little endian");
  const auto values = f.values();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("snapshot: write failed for " + path);
}

DistributionField read_snapshot(const std::string& path, SnapshotHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  SnapshotHeader h;
  h.dims = j.at("dims").get<std::array<std::size_t, 3>>();
  h.v_max = j.at("v_max").get<double>();
  h.beta = j.at("beta").get<double>();
  h.q = j.at("q").get<double>();
  h.frame = j.at("frame").get<std::string>() == "moving" ? Frame::moving : Frame::fixed;
  h.normalization = parse_normalization(j.at("normalization").get<std::string>());
  DistributionField f(h.dims[0], h.dims[1], h.dims[2]);
  f.frame = h.frame;
  f.normalization = h.normalization;
  auto values = f.values();
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("snapshot: truncated data in " + path);
  if (header) *header = h;
  return f;
}

}  // namespace kinetics
