#include "kinetics/collision_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace kinetics {

namespace {

constexpr double pi = std::numbers::pi;
const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * pi);

double dot(const Velocity& a, const Velocity& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double distance(const Velocity& v, const Velocity& u) {
  const double d0 = v[0] - u[0], d1 = v[1] - u[1], d2 = v[2] - u[2];
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_unit(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * z * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Integral of k(v, .) over the cube of side h centred at v, split into six
// pyramids with apex v so that the 1/|v-u| singularity becomes a smooth factor.
double cell_integral(const Velocity& v, double h) {
  std::vector<double> x, w;
  gauss_unit(10, x, w);
  const double half = 0.5 * h;
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    for (int sign = -1; sign <= 1; sign += 2)
      for (std::size_t is = 0; is < x.size(); ++is)
        for (std::size_t ia = 0; ia < x.size(); ++ia)
          for (std::size_t ib = 0; ib < x.size(); ++ib) {
            const double s = x[is];
            const double a = (2.0 * x[ia] - 1.0) * half;
            const double b = (2.0 * x[ib] - 1.0) * half;
            Velocity p{};
            p[static_cast<std::size_t>(axis)] = sign * half;
            p[static_cast<std::size_t>((axis + 1) % 3)] = a;
            p[static_cast<std::size_t>((axis + 2) % 3)] = b;
            const Velocity u{v[0] + s * p[0], v[1] + s * p[1], v[2] + s * p[2]};
            const double jac = s * s * half * h * h;
            total += w[is] * w[ia] * w[ib] * jac * grad_kernel(v, u);
          }
  return total;
}

}  // namespace

double collision_frequency(double speed) {
  const double r = std::abs(speed);
  if (r < 1e-4) return 2.0 * pi * std::sqrt(2.0 / pi) * (2.0 + r * r / 3.0);
  return 2.0 * pi *
         (std::sqrt(2.0 / pi) * std::exp(-0.5 * r * r) + (r + 1.0 / r) * std::erf(r / std::sqrt(2.0)));
}

double collision_frequency(const Velocity& v) { return collision_frequency(std::sqrt(dot(v, v))); }

double kernel_loss(const Velocity& v, const Velocity& u) {
  return inv_sqrt_2pi * distance(v, u) * std::exp(-0.25 * (dot(v, v) + dot(u, u)));
}

double kernel_gain(const Velocity& v, const Velocity& u) {
  const double d = distance(v, u);
  if (d == 0.0) throw std::domain_error("grad kernel is singular at v == u");
  const double e = dot(v, v) - dot(u, u);
  return 4.0 * inv_sqrt_2pi / d * std::exp(-0.125 * d * d - e * e / (8.0 * d * d));
}

double grad_kernel(const Velocity& v, const Velocity& u) { return kernel_gain(v, u) - kernel_loss(v, u); }

double kernel_envelope(const Velocity& v, const Velocity& u) {
  const double d = distance(v, u);
  if (d == 0.0) throw std::domain_error("kernel envelope is singular at v == u");
  const double e = dot(v, v) - dot(u, u);
  return (d + 1.0 / d) * std::exp(-0.125 * d * d - e * e / (8.0 * d * d));
}

CollisionOperator::CollisionOperator(const VelocityGrid& grid, bool conservative)
    : grid_(grid), conservative_(conservative) {
  const std::size_t n = grid_.size();
  const auto ni = static_cast<Eigen::Index>(n);
  nu_.resize(n);
  for (std::size_t i = 0; i < n; ++i) nu_[i] = collision_frequency(grid_.node(i));

  table_.setZero(ni, ni);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = grad_kernel(grid_.node(static_cast<std::size_t>(i)), grid_.node(static_cast<std::size_t>(j)));
      table_(i, j) = k;
      table_(j, i) = k;
    }

  diag_.resize(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < ni; ++i)
    diag_[static_cast<std::size_t>(i)] = cell_integral(grid_.node(static_cast<std::size_t>(i)), grid_.spacing());

  k_raw_ = table_ * grid_.cell_volume();
  for (Eigen::Index i = 0; i < ni; ++i) k_raw_(i, i) = diag_[static_cast<std::size_t>(i)];

  if (!conservative_) {
    k_ = k_raw_;
    return;
  }
  // L_c = (I - P) L_h (I - P) with P = dv^3 E E^T; K_c = nu - L_c.
  Eigen::MatrixXd l = -k_raw_;
  for (Eigen::Index i = 0; i < ni; ++i) l(i, i) += nu_[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd& e = grid_.invariants();
  const double w = grid_.cell_volume();
  const Eigen::MatrixXd le = l * e;                    // n x 5
  const Eigen::MatrixXd ele = e.transpose() * le;      // 5 x 5
  Eigen::MatrixXd lc = l;
  lc.noalias() -= w * le * e.transpose();
  lc.noalias() -= w * e * le.transpose();
  lc.noalias() += (w * w) * e * (ele * e.transpose());
  lc = 0.5 * (lc + lc.transpose()).eval();
  k_ = -lc;
  for (Eigen::Index i = 0; i < ni; ++i) k_(i, i) += nu_[static_cast<std::size_t>(i)];
}

void CollisionOperator::apply_K(std::span<const double> f, std::span<double> out) const {
  apply_K_rows(f.data(), out.data(), 1);
}

void CollisionOperator::apply_L(std::span<const double> f, std::span<double> out) const {
  apply_K(f, out);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = nu_[i] * f[i] - out[i];
}

void CollisionOperator::apply_K_rows(const double* in, double* out, std::size_t rows) const {
  using RowBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::Map<const RowBlock> src(in, static_cast<Eigen::Index>(rows), n);
  Eigen::Map<RowBlock> dst(out, static_cast<Eigen::Index>(rows), n);
  // K is symmetric, so each output row is src_row * K.
  dst.noalias() = src * k_;
}

void CollisionOperator::project_P(std::span<const double> f, std::span<double> out) const {
  const Eigen::MatrixXd& e = grid_.invariants();
  Eigen::Map<const Eigen::VectorXd> src(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::Matrix<double, 5, 1> c = grid_.cell_volume() * (e.transpose() * src);
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = e * c;
}

void CollisionOperator::complement_P(std::span<const double> f, std::span<double> out) const {
  std::vector<double> p(f.size());
  project_P(f, p);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] - p[i];
}

double CollisionOperator::defect(const Eigen::MatrixXd& k, const WeightFunction& wf) const {
  const auto sm = grid_.sqrt_mu();
  Eigen::Map<const Eigen::VectorXd> chi0(sm.data(), static_cast<Eigen::Index>(sm.size()));
  const Eigen::VectorXd kc = k * chi0;
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    m = std::max(m, wf(grid_.node(i)) * std::abs(nu_[i] * sm[i] - kc[static_cast<Eigen::Index>(i)]));
  return m;
}

double CollisionOperator::raw_null_defect(const WeightFunction& wf) const { return defect(k_raw_, wf); }
double CollisionOperator::null_defect(const WeightFunction& wf) const { return defect(k_, wf); }

double CollisionOperator::k_operator_norm(std::size_t iterations, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
  for (auto& c : x) c = normal(rng);
  x.normalize();
  double lambda = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Eigen::VectorXd y = k_ * x;
    const double next = y.norm();
    x = y / next;
    if (it > 10 && std::abs(next - lambda) <= 1e-12 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

SphericalDesign SphericalDesign::with_points(std::size_t points) {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  auto normalized = [](Velocity v) {
    const double r = std::sqrt(dot(v, v));
    return Velocity{v[0] / r, v[1] / r, v[2] / r};
  };
  // Icosahedron vertices, one per antipodal pair.
  std::vector<Velocity> ico;
  for (double s : {1.0, -1.0}) {
    ico.push_back(normalized({0.0, 1.0, s * phi}));
    ico.push_back(normalized({1.0, s * phi, 0.0}));
    ico.push_back(normalized({s * phi, 0.0, 1.0}));
  }
  SphericalDesign d;
  if (points == 12) {
    d.nodes = ico;
    d.weights.assign(6, 4.0 * pi / 6.0);
    return d;
  }
  if (points != 32) throw ConfigError("spherical design must have 12 or 32 points");
  // Vertices of the dual dodecahedron (icosahedron face centres), one per pair.
  std::vector<Velocity> dod;
  for (double s2 : {1.0, -1.0})
    for (double s3 : {1.0, -1.0}) dod.push_back(normalized({1.0, s2, s3}));
  for (double s : {1.0, -1.0}) {
    dod.push_back(normalized({0.0, phi, s / phi}));
    dod.push_back(normalized({1.0 / phi, 0.0, s * phi}));
    dod.push_back(normalized({s * phi, 1.0 / phi, 0.0}));
  }
  // Pair weights exact for constants and for z^6 along a five-fold axis,
  // which removes the icosahedral degree-6 invariant: a 9-design.
  const Velocity axis = ico.front();
  double mi = 0.0, md = 0.0;
  for (const auto& v : ico) mi += std::pow(dot(v, axis), 6);
  for (const auto& v : dod) md += std::pow(dot(v, axis), 6);
  // 6 wi + 10 wd = 4 pi;  wi mi + wd md = 4 pi / 7.
  const double det = 6.0 * md - 10.0 * mi;
  const double wi = (4.0 * pi * md - 10.0 * 4.0 * pi / 7.0) / det;
  const double wd = (6.0 * 4.0 * pi / 7.0 - 4.0 * pi * mi) / det;
  d.nodes = ico;
  d.nodes.insert(d.nodes.end(), dod.begin(), dod.end());
  d.weights.assign(6, wi);
  d.weights.insert(d.weights.end(), 10, wd);
  return d;
}

namespace {

struct Corners {
  std::array<std::size_t, 15> index;
  std::array<double, 15> weight;
  int count = 0;

  void add(int i1, int i2, int i3, double w, int n) {
    if (w == 0.0 || i1 < 0 || i1 >= n || i2 < 0 || i2 >= n || i3 < 0 || i3 >= n) return;
    index[static_cast<std::size_t>(count)] = static_cast<std::size_t>(i1 + n * (i2 + n * i3));
    weight[static_cast<std::size_t>(count)] = w;
    ++count;
  }
};

Corners trilinear(const std::array<int, 3>& node, const std::array<int, 3>& base,
                  const std::array<double, 3>& frac, int n) {
  Corners c;
  for (int a = 0; a < 8; ++a) {
    const int o1 = a & 1, o2 = (a >> 1) & 1, o3 = (a >> 2) & 1;
    const double w = (o1 ? frac[0] : 1.0 - frac[0]) * (o2 ? frac[1] : 1.0 - frac[1]) *
                     (o3 ? frac[2] : 1.0 - frac[2]);
    c.add(node[0] + base[0] + o1, node[1] + base[1] + o2, node[2] + base[2] + o3, w, n);
  }
  return c;
}

// Trilinear weights reproduce 1 and v but overshoot |v|^2 by h^2 sum phi (1 - phi).
// A zero-mass, zero-momentum seven-point stencil at the nearest node removes it.
Corners conservative_deposit(const std::array<int, 3>& node, const std::array<int, 3>& base,
                             const std::array<double, 3>& frac, int n) {
  Corners c = trilinear(node, base, frac, n);
  double excess = 0.0;
  std::array<int, 3> k0{};
  for (std::size_t d = 0; d < 3; ++d) {
    excess += frac[d] * (1.0 - frac[d]);
    k0[d] = node[d] + base[d] + (frac[d] >= 0.5 ? 1 : 0);
  }
  const double a = excess / 6.0;
  if (a == 0.0) return c;
  c.add(k0[0], k0[1], k0[2], 6.0 * a, n);
  c.add(k0[0] + 1, k0[1], k0[2], -a, n);
  c.add(k0[0] - 1, k0[1], k0[2], -a, n);
  c.add(k0[0], k0[1] + 1, k0[2], -a, n);
  c.add(k0[0], k0[1] - 1, k0[2], -a, n);
  c.add(k0[0], k0[1], k0[2] + 1, -a, n);
  c.add(k0[0], k0[1], k0[2] - 1, -a, n);
  return c;
}

}  // namespace

CollisionForm::CollisionForm(const VelocityGrid& grid, std::size_t design_points)
    : grid_(grid), design_points_(design_points) {
  const SphericalDesign design = SphericalDesign::with_points(design_points);
  pairs_ = design.nodes.size();
  const int n = static_cast<int>(grid_.per_axis());
  const int span = 2 * n - 1;
  const double cell = grid_.cell_volume();
  const double h = grid_.spacing();
  stencils_.resize(static_cast<std::size_t>(span * span * span) * pairs_);
  for (int d3 = -(n - 1); d3 <= n - 1; ++d3)
    for (int d2 = -(n - 1); d2 <= n - 1; ++d2)
      for (int d1 = -(n - 1); d1 <= n - 1; ++d1)
        for (std::size_t p = 0; p < pairs_; ++p) {
          const Velocity& w = design.nodes[p];
          const double zw = d1 * w[0] + d2 * w[1] + d3 * w[2];  // in grid units
          Stencil st{};
          for (std::size_t c = 0; c < 3; ++c) {
            const double sv = -zw * w[c];
            const double fv = std::floor(sv);
            st.base_v[c] = static_cast<int>(fv);
            st.frac_v[c] = sv - fv;
          }
          st.coeff = std::abs(zw) * h * design.weights[p] * cell;
          const std::size_t lattice =
              static_cast<std::size_t>(((d3 + n - 1) * span + (d2 + n - 1)) * span + (d1 + n - 1));
          stencils_[lattice * pairs_ + p] = st;
        }

  // Merge the corners of all pairs sharing a lattice offset into one tap list,
  // computed around a node far from every face.
  const int far = 3 * n;
  const int big = 6 * n;
  const std::array<int, 3> centre{far, far, far};
  const std::size_t lattices = static_cast<std::size_t>(span * span * span);
  tap_begin_.assign(lattices + 1, 0);
  for (std::size_t l = 0; l < lattices; ++l) {
    std::map<std::array<int, 3>, double> merged;
    for (std::size_t p = 0; p < pairs_; ++p) {
      const Stencil& st = stencils_[l * pairs_ + p];
      if (st.coeff == 0.0) continue;
      const Corners c = conservative_deposit(centre, st.base_v, st.frac_v, big);
      for (int a = 0; a < c.count; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        const int lin = static_cast<int>(c.index[ia]);
        merged[{lin % big - far, (lin / big) % big - far, lin / (big * big) - far}] += st.coeff * c.weight[ia];
      }
    }
    tap_begin_[l] = taps_.size();
    for (const auto& [o, w] : merged)
      if (w != 0.0) taps_.push_back({o, w});
  }
  tap_begin_[lattices] = taps_.size();

  // The loss uses the same angular rule as the gain so that equilibria cancel exactly.
  const auto nv = static_cast<Eigen::Index>(grid_.size());
  const auto mu = grid_.mu();
  loss_.resize(nv, nv);
  for (Eigen::Index i = 0; i < nv; ++i)
    for (Eigen::Index j = 0; j < nv; ++j) {
      const int d1 = static_cast<int>(grid_.axis_index(static_cast<std::size_t>(i), 0)) -
                     static_cast<int>(grid_.axis_index(static_cast<std::size_t>(j), 0));
      const int d2 = static_cast<int>(grid_.axis_index(static_cast<std::size_t>(i), 1)) -
                     static_cast<int>(grid_.axis_index(static_cast<std::size_t>(j), 1));
      const int d3 = static_cast<int>(grid_.axis_index(static_cast<std::size_t>(i), 2)) -
                     static_cast<int>(grid_.axis_index(static_cast<std::size_t>(j), 2));
      double b = 0.0;
      if (i != j)
        for (std::size_t p = 0; p < pairs_; ++p) b += stencil(d1, d2, d3, p).coeff;
      loss_(i, j) = b * mu[static_cast<std::size_t>(j)];
    }
}

const CollisionForm::Stencil& CollisionForm::stencil(int d1, int d2, int d3, std::size_t p) const {
  const int n = static_cast<int>(grid_.per_axis());
  const int span = 2 * n - 1;
  const std::size_t lattice =
      static_cast<std::size_t>(((d3 + n - 1) * span + (d2 + n - 1)) * span + (d1 + n - 1));
  return stencils_[lattice * pairs_ + p];
}


void CollisionForm::evaluate(const Block& f, const Block& g, Block& out) const {
  const auto nv = static_cast<Eigen::Index>(grid_.size());
  if (f.rows() != nv || g.rows() != nv || f.cols() != g.cols())
    throw std::invalid_argument("CollisionForm: block shapes do not match the velocity grid");
  const Eigen::Index cols = f.cols();
  const auto sm = grid_.sqrt_mu();

  Block fh(nv, cols), gh(nv, cols);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const double s = 1.0 / sm[static_cast<std::size_t>(i)];
    fh.row(i) = f.row(i) * s;
    gh.row(i) = g.row(i) * s;
  }

  // Loss: f(v) * sum_u B sqrt(mu(u)) g(u).
  out.noalias() = loss_ * gh;
  out.array() *= f.array();
  out *= -1.0;

  Block gain = Block::Zero(nv, cols);
  deposit_gain(fh, gh, gain);
  out += gain;
}

// Weak form: a pre-collision pair (v_i, u_j) deposits
//   B sqrt(mu(v_i)) f(v_i) sqrt(mu(u_j)) g(u_j) / sqrt(mu(v'))
// onto nodes around v' with weights reproducing 1, v and |v|^2, so mass and,
// for the symmetric part, momentum and energy are exact inside the box.
// Corners falling outside the box are dropped. Pairs are visited by lattice
// offset d = i - j so each tap is a shifted axpy over contiguous x-rows.
void CollisionForm::deposit_gain(const Block& fh, const Block& gh, Block& gain) const {
  const auto nv = static_cast<Eigen::Index>(grid_.size());
  const auto ncols = static_cast<std::size_t>(fh.cols());
  const int n = static_cast<int>(grid_.per_axis());
  const int span = 2 * n - 1;
  const auto sm = grid_.sqrt_mu();
  const auto mu = grid_.mu();
  // a = sqrt(mu) f, b = sqrt(mu) g
  Block a(nv, fh.cols()), b(nv, fh.cols());
  for (Eigen::Index i = 0; i < nv; ++i) {
    const double m = mu[static_cast<std::size_t>(i)];
    a.row(i) = fh.row(i) * m;
    b.row(i) = gh.row(i) * m;
  }
  Block q(nv, fh.cols());
  auto lin = [n](int i1, int i2, int i3) { return static_cast<std::size_t>(i1 + n * (i2 + n * i3)); };

  for (int d3 = -(n - 1); d3 <= n - 1; ++d3)
    for (int d2 = -(n - 1); d2 <= n - 1; ++d2)
      for (int d1 = -(n - 1); d1 <= n - 1; ++d1) {
        if (d1 == 0 && d2 == 0 && d3 == 0) continue;
        const std::array<int, 3> d{d1, d2, d3};
        std::array<int, 3> lo{}, hi{};  // source nodes i with i - d in the box
        for (std::size_t c = 0; c < 3; ++c) {
          lo[c] = std::max(0, d[c]);
          hi[c] = std::min(n, n + d[c]);
        }
        const std::size_t row_len = static_cast<std::size_t>(hi[0] - lo[0]) * ncols;
        for (int i3 = lo[2]; i3 < hi[2]; ++i3)
          for (int i2 = lo[1]; i2 < hi[1]; ++i2) {
            const std::size_t i = lin(lo[0], i2, i3);
            const std::size_t j = lin(lo[0] - d1, i2 - d2, i3 - d3);
            const double* ai = a.data() + i * ncols;
            const double* bj = b.data() + j * ncols;
            double* qi = q.data() + i * ncols;
            for (std::size_t k = 0; k < row_len; ++k) qi[k] = ai[k] * bj[k];
          }
        const auto l = static_cast<std::size_t>(((d3 + n - 1) * span + (d2 + n - 1)) * span + (d1 + n - 1));
        for (std::size_t t = tap_begin_[l]; t < tap_begin_[l + 1]; ++t) {
          const Tap& tap = taps_[t];
          std::array<int, 3> tlo{}, thi{};
          bool empty = false;
          for (std::size_t c = 0; c < 3; ++c) {
            tlo[c] = std::max(lo[c], -tap.offset[c]);
            thi[c] = std::min(hi[c], n - tap.offset[c]);
            empty = empty || tlo[c] >= thi[c];
          }
          if (empty) continue;
          const std::size_t len = static_cast<std::size_t>(thi[0] - tlo[0]) * ncols;
          const double w = tap.weight;
          for (int i3 = tlo[2]; i3 < thi[2]; ++i3)
            for (int i2 = tlo[1]; i2 < thi[1]; ++i2) {
              const std::size_t i = lin(tlo[0], i2, i3);
              const std::size_t o = lin(tlo[0] + tap.offset[0], i2 + tap.offset[1], i3 + tap.offset[2]);
              const double* src = q.data() + i * ncols;
              double* dst = gain.data() + o * ncols;
              for (std::size_t k = 0; k < len; ++k) dst[k] += w * src[k];
            }
        }
      }
  for (Eigen::Index i = 0; i < nv; ++i) gain.row(i) /= sm[static_cast<std::size_t>(i)];
}

std::vector<double> CollisionForm::evaluate(std::span<const double> f, std::span<const double> g) const {
  const auto nv = static_cast<Eigen::Index>(grid_.size());
  Block fb = Eigen::Map<const Block>(f.data(), nv, 1);
  Block gb = Eigen::Map<const Block>(g.data(), nv, 1);
  Block out(nv, 1);
  evaluate(fb, gb, out);
  return {out.data(), out.data() + out.size()};
}

ModifiedMultiplier::ModifiedMultiplier(const VelocityGrid& grid, const ForceField& force,
                                       const WeightFunction& wf, bool weighted)
    : force_(force), wf_(wf), weighted_(weighted) {
  nu_.resize(grid.size());
  coeff_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Velocity& v = grid.node(i);
    nu_[i] = collision_frequency(v);
    coeff_[i] = 0.5 * v[0] + (weighted_ ? wf_.log_derivative_v1(v) : 0.0);
  }
  const double m = minimum();
  if (!(m > 0.0))
    throw ConfigError("modified collision frequency is not positive (min " + std::to_string(m) +
                      "); the wall forcing is too strong");
}

double ModifiedMultiplier::operator()(double t, double x, const Velocity& v) const {
  const double c = 0.5 * v[0] + (weighted_ ? wf_.log_derivative_v1(v) : 0.0);
  return collision_frequency(v) - force_(t, x) * c;
}

double ModifiedMultiplier::minimum(std::size_t t_samples, std::size_t x_samples) const {
  const double period = force_.period() > 0.0 ? force_.period() : 1.0;
  double g_min = 0.0, g_max = 0.0;
  for (std::size_t it = 0; it < t_samples; ++it) {
    const double t = period * static_cast<double>(it) / static_cast<double>(t_samples);
    for (std::size_t ix = 0; ix < x_samples; ++ix) {
      const double x = static_cast<double>(ix) / static_cast<double>(x_samples - 1);
      const double g = force_(t, x);
      g_min = std::min(g_min, g);
      g_max = std::max(g_max, g);
    }
  }
  // nu - G c is affine in G, so the extremes of G bound it.
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu_.size(); ++i)
    m = std::min({m, nu_[i] - g_min * coeff_[i], nu_[i] - g_max * coeff_[i]});
  return m;
}

K1BoundReport verify_k1_bound(std::size_t pairs, std::uint64_t seed, double v_range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-v_range, v_range);
  K1BoundReport r;
  r.pairs = pairs;
  // k2 / envelope <= 4 (2 pi)^{-1/2}; k1 / envelope <= (2 pi)^{-1/2} because
  // (|v|^2 + |u|^2)/4 >= |v-u|^2/8 + (|v|^2-|u|^2)^2/(8|v-u|^2).
  r.analytic_constant = 5.0 * inv_sqrt_2pi;
  for (std::size_t k = 0; k < pairs; ++k) {
    Velocity v{uni(rng), uni(rng), uni(rng)};
    Velocity u{uni(rng), uni(rng), uni(rng)};
    if (distance(v, u) == 0.0) continue;
    const double env = kernel_envelope(v, u);
    if (env == 0.0) continue;
    r.fitted_constant = std::max(r.fitted_constant, std::abs(grad_kernel(v, u)) / env);
  }
  r.holds = r.fitted_constant <= r.analytic_constant;
  return r;
}

K2BoundReport verify_k2_bound(const VelocityGrid& grid, double q, double beta) {
  K2BoundReport r;
  const std::size_t n = grid.size();
  r.speeds.resize(n);
  r.ratios.resize(n);
  std::vector<double> ufac(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s2 = dot(grid.node(j), grid.node(j));
    ufac[j] = std::exp(-0.25 * q * s2) * std::pow(1.0 + std::sqrt(s2), -beta);
  }
  const double cell = grid.cell_volume();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    const Velocity& v = grid.node(i);
    const double s2 = dot(v, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum += std::abs(grad_kernel(v, grid.node(j))) * ufac[j] * cell;
    }
    sum *= std::exp(0.25 * q * s2);
    // Singular cell: |k| integrates like k there, since k2 dominates near the diagonal.
    sum += std::abs(cell_integral(v, grid.spacing())) * ufac[i] * std::exp(0.25 * q * s2);
    r.speeds[i] = std::sqrt(s2);
    r.ratios[i] = sum / std::pow(1.0 + r.speeds[i], -1.0 - beta);
  }
  double outer = 0.0;
  for (double s : r.speeds) outer = std::max(outer, s);
  for (std::size_t i = 0; i < n; ++i) {
    r.max_ratio = std::max(r.max_ratio, r.ratios[i]);
    if (r.speeds[i] >= outer - 1e-12) r.outer_shell_ratio = std::max(r.outer_shell_ratio, r.ratios[i]);
  }
  return r;
}

CoercivityReport coercivity_floor(const CollisionOperator& op, std::size_t samples, std::uint64_t seed) {
  const VelocityGrid& grid = op.grid();
  const auto n = static_cast<Eigen::Index>(op.size());
  const auto nu = op.nu();
  Eigen::MatrixXd l = -op.k_matrix();
  for (Eigen::Index i = 0; i < n; ++i) l(i, i) += nu[static_cast<std::size_t>(i)];

  // Orthonormal basis of the complement of the invariants.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(grid.invariants());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd z = q.rightCols(n - 5);
  const Eigen::MatrixXd a = z.transpose() * l * z;
  Eigen::MatrixXd b = z.transpose() * Eigen::Map<const Eigen::VectorXd>(nu.data(), n).asDiagonal() * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()),
                                                             Eigen::EigenvaluesOnly);
  CoercivityReport r;
  r.eigen_floor = es.eigenvalues().minCoeff();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  r.samples = samples;
  r.random_min_quotient = std::numeric_limits<double>::infinity();
  std::vector<double> f(op.size()), pf(op.size()), lf(op.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& x : f) x = normal(rng);
    op.complement_P(f, pf);
    op.apply_L(pf, lf);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < op.size(); ++i) {
      num += lf[i] * pf[i];
      den += nu[i] * pf[i] * pf[i];
    }
    r.random_min_quotient = std::min(r.random_min_quotient, num / den);
  }
  return r;
}

double ConservationDefects::max() const { return *std::max_element(defects.begin(), defects.end()); }

ConservationDefects gamma_conservation(const CollisionForm& form, std::span<const double> f,
                                       std::span<const double> g) {
  // Mass is conserved by Gamma(f, g) itself; momentum and energy only by the
  // symmetric part, so those are measured on (Gamma(f, g) + Gamma(g, f)) / 2.
  const VelocityGrid& grid = form.grid();
  const std::vector<double> fg = form.evaluate(f, g);
  const std::vector<double> gf = form.evaluate(g, f);
  ConservationDefects d;
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0.0, a = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double value = c == 0 ? fg[j] : 0.5 * (fg[j] + gf[j]);
      const double chi = grid.chi(c, j);
      s += value * chi;
      a += std::abs(value * chi);
    }
    d.defects[c] = a > 0.0 ? std::abs(s) / a : 0.0;
  }
  return d;
}

std::vector<double> smooth_random_velocity_field(const VelocityGrid& grid, const WeightFunction& wf,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-1.5, 1.5), width(0.8, 1.6), amp(-1.0, 1.0);
  struct Bump {
    Velocity c;
    double s, a;
  };
  std::vector<Bump> bumps(3);
  for (auto& b : bumps) b = {{centre(rng), centre(rng), centre(rng)}, width(rng), amp(rng)};
  std::vector<double> f(grid.size());
  double m = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Velocity& v = grid.node(j);
    double h = 0.0;
    for (const auto& b : bumps) {
      const Velocity d{v[0] - b.c[0], v[1] - b.c[1], v[2] - b.c[2]};
      h += b.a * std::exp(-dot(d, d) / (2.0 * b.s * b.s));
    }
    f[j] = h / wf(v);
    m = std::max(m, std::abs(h));
  }
  for (auto& x : f) x /= m;
  return f;
}

GammaBoundReport fit_gamma_bound(const CollisionForm& form, const WeightFunction& wf, std::size_t pairs,
                                 std::uint64_t seed) {
  const VelocityGrid& grid = form.grid();
  GammaBoundReport r;
  r.pairs = pairs;
  const auto nv = static_cast<Eigen::Index>(grid.size());
  CollisionForm::Block fb(nv, static_cast<Eigen::Index>(pairs)), gb(nv, static_cast<Eigen::Index>(pairs));
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto f = smooth_random_velocity_field(grid, wf, seed + 2 * k);
    const auto g = smooth_random_velocity_field(grid, wf, seed + 2 * k + 1);
    for (Eigen::Index j = 0; j < nv; ++j) {
      fb(j, static_cast<Eigen::Index>(k)) = f[static_cast<std::size_t>(j)];
      gb(j, static_cast<Eigen::Index>(k)) = g[static_cast<std::size_t>(j)];
    }
  }
  CollisionForm::Block out(nv, static_cast<Eigen::Index>(pairs));
  form.evaluate(fb, gb, out);
  for (std::size_t k = 0; k < pairs; ++k) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < nv; ++j)
      m = std::max(m, std::abs(out(j, static_cast<Eigen::Index>(k))) / collision_frequency(grid.node(static_cast<std::size_t>(j))));
    r.fitted_constant = std::max(r.fitted_constant, m);  // ||w f|| = ||w g|| = 1
  }
  return r;
}

}  // namespace kinetics
