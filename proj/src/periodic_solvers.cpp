#include "kinetics/periodic_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

namespace kinetics::detail {
class ShootingOperator;
}

namespace Eigen::internal {
template <>
struct traits<kinetics::detail::ShootingOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace kinetics::detail {

// Matrix-free wrapper so Eigen's GMRES can drive the shooting map.
class ShootingOperator : public Eigen::EigenBase<ShootingOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  ShootingOperator(Eigen::Index n, std::function<void(const double*, double*)> apply)
      : n_(n), apply_(std::move(apply)) {}

  Eigen::Index rows() const { return n_; }
  Eigen::Index cols() const { return n_; }
  void apply(const double* x, double* y) const { apply_(x, y); }

  template <typename Rhs>
  Eigen::Product<ShootingOperator, Rhs, Eigen::AliasFreeProduct> operator*(
      const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<ShootingOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

 private:
  Eigen::Index n_;
  std::function<void(const double*, double*)> apply_;
};

}  // namespace kinetics::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<kinetics::detail::ShootingOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<kinetics::detail::ShootingOperator, Rhs,
                                generic_product_impl<kinetics::detail::ShootingOperator, Rhs>> {
  using Scalar = typename Product<kinetics::detail::ShootingOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const kinetics::detail::ShootingOperator& lhs, const Rhs& rhs,
                            const Scalar& alpha) {
    Eigen::VectorXd x = rhs;
    Eigen::VectorXd y(x.size());
    lhs.apply(x.data(), y.data());
    dst += alpha * y;
  }
};
}  // namespace Eigen::internal

namespace kinetics {

namespace {

double vec_norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// (1 - e^{-a}) / a, continuous at 0.
double phi1(double a) { return std::abs(a) < 1e-8 ? 1.0 - 0.5 * a : -std::expm1(-a) / a; }

DistributionField difference(const DistributionField& a, const DistributionField& b) {
  DistributionField d = a;
  d.axpy(-1.0, b);
  return d;
}

BoundaryTrace difference(const BoundaryTrace& a, const BoundaryTrace& b) {
  BoundaryTrace d = a;
  auto dv = d.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] -= bv[i];
  return d;
}

double relative(double num, double den) {
  if (num == 0.0) return 0.0;
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

bool is_zero(const DistributionField* g) {
  if (!g) return true;
  return std::all_of(g->values().begin(), g->values().end(), [](double x) { return x == 0.0; });
}

bool is_zero(const BoundaryTrace* r) {
  if (!r) return true;
  return std::all_of(r->values().begin(), r->values().end(), [](double x) { return x == 0.0; });
}

}  // namespace

CollisionTables CollisionTables::build(const VelocityGrid& grid, std::size_t design_points) {
  CollisionTables t;
  t.op = std::make_shared<const CollisionOperator>(grid);
  t.form = std::make_shared<const CollisionForm>(grid, design_points);
  return t;
}

// ---------------------------------------------------------------------------

KineticModel::KineticModel(PhaseGrid grid, const WallMotion& wall, CollisionTables tables,
                           WeightFunction wf, std::size_t gamma_stride, std::size_t gamma_time_stride)
    : grid_(std::move(grid)),
      clock_(wall),
      force_(ForceField::from_clock(clock_)),
      tables_(std::move(tables)),
      quad_(grid_.velocity),
      wf_(wf),
      stride_(std::max<std::size_t>(gamma_stride, 1)),
      time_stride_(std::max<std::size_t>(gamma_time_stride, 1)) {
  grid_.space_time =
      SpaceTimeGrid(grid_.space_time.nx(), grid_.space_time.nt(), clock_.transformed_period());
  if (tables_.op->size() != grid_.velocity.size() ||
      tables_.form->grid().size() != grid_.velocity.size())
    throw ConfigError("collision tables were built for a different velocity grid");
  if (grid_.space_time.nt() % time_stride_ != 0)
    throw ConfigError("n_t must be a multiple of the Gamma time stride");
  // Rejects wall motions for which nu - G v1 / 2 is not positive on the grid.
  ModifiedMultiplier(grid_.velocity, force_, wf_, false);
  flow_ = std::make_shared<FlowMap>(force_);
  const std::size_t nx = grid_.space_time.nx();
  for (std::size_t i = stride_ / 2; i < nx; i += stride_) gamma_cells_.push_back(i);
  if (gamma_cells_.empty()) gamma_cells_.push_back(nx / 2);
  for (std::size_t it = 0; it < grid_.space_time.nt(); ++it)
    wall_maxwellian_.push_back(discrete_wall_maxwellian(
        grid_.velocity, clock_.wall_state_at(grid_.space_time.t(it)).position));
}

std::span<const double> KineticModel::wall_maxwellian(std::size_t it) const {
  return wall_maxwellian_[it];
}

std::size_t KineticModel::gamma_key(std::size_t it) const {
  const std::size_t block = (it + 1) / time_stride_;
  return block == 0 ? grid_.space_time.nt() - 1 : block * time_stride_ - 1;
}

namespace {

// (I - P) Gamma(f, f) on several slices in one batched evaluation.
void gamma_slices(const CollisionForm& form, const CollisionOperator& op,
                  std::span<const std::size_t> cells, std::size_t stride, std::size_t nx,
                  const std::vector<std::span<const double>>& in, const std::vector<std::span<double>>& out) {
  const std::size_t nv = op.size();
  const std::size_t m = cells.size();
  std::vector<std::size_t> live;
  for (std::size_t s = 0; s < in.size(); ++s) {
    std::fill(out[s].begin(), out[s].end(), 0.0);
    if (std::any_of(in[s].begin(), in[s].end(), [](double x) { return x != 0.0; })) live.push_back(s);
  }
  if (live.empty()) return;
  const auto cols = static_cast<Eigen::Index>(live.size() * m);
  CollisionForm::Block fb(static_cast<Eigen::Index>(nv), cols), gb(static_cast<Eigen::Index>(nv), cols);
  for (std::size_t iv = 0; iv < nv; ++iv)
    for (std::size_t l = 0; l < live.size(); ++l)
      for (std::size_t p = 0; p < m; ++p)
        fb(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(l * m + p)) = in[live[l]][cells[p] * nv + iv];
  form.evaluate(fb, fb, gb);

  std::vector<std::vector<double>> g(m, std::vector<double>(nv));
  std::vector<double> tmp(nv);
  for (std::size_t l = 0; l < live.size(); ++l) {
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t iv = 0; iv < nv; ++iv)
        tmp[iv] = gb(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(l * m + p));
      op.complement_P(tmp, g[p]);
    }
    const auto dst = out[live[l]];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      auto row = dst.subspan(ix * nv, nv);
      if (ix <= cells.front() || m == 1) {
        std::copy(g.front().begin(), g.front().end(), row.begin());
      } else if (ix >= cells.back()) {
        std::copy(g.back().begin(), g.back().end(), row.begin());
      } else {
        const std::size_t p = (ix - cells.front()) / stride;
        const double w = static_cast<double>(ix - cells[p]) / static_cast<double>(stride);
        for (std::size_t iv = 0; iv < nv; ++iv) row[iv] = (1.0 - w) * g[p][iv] + w * g[p + 1][iv];
      }
    }
  }
}

}  // namespace

void KineticModel::gamma_slice(std::span<const double> f_slice, std::span<double> out) const {
  gamma_slices(*tables_.form, *tables_.op, gamma_cells_, stride_, grid_.space_time.nx(), {f_slice}, {out});
}

void KineticModel::add_force_source(std::size_t it, std::span<double> out) const {
  const auto& vg = grid_.velocity;
  const auto& st = grid_.space_time;
  const std::size_t nv = vg.size();
  const double t = st.t(it);
  const auto sm = vg.sqrt_mu();
  for (std::size_t ix = 0; ix < st.nx(); ++ix) {
    const double g = force_(t, st.x(ix));
    if (g == 0.0) continue;
    for (std::size_t iv = 0; iv < nv; ++iv) out[ix * nv + iv] += g * vg.node(iv)[0] * sm[iv];
  }
}

DistributionField KineticModel::nonlinear_volume_source(const DistributionField& f) const {
  const std::size_t nt = f.nt();
  DistributionField g(nt, f.nx(), f.nv());
  DistributionField keyed(nt / time_stride_, f.nx(), f.nv());
  std::vector<std::span<const double>> in;
  std::vector<std::span<double>> out;
  for (std::size_t b = 0; b < nt / time_stride_; ++b) {
    in.push_back(f.slice((b + 1) * time_stride_ - 1));
    out.push_back(keyed.slice(b));
  }
  gamma_slices(*tables_.form, *tables_.op, gamma_cells_, stride_, f.nx(), in, out);
  for (std::size_t it = 0; it < nt; ++it) {
    const auto src = keyed.slice((gamma_key(it) + 1) / time_stride_ - 1);
    std::copy(src.begin(), src.end(), g.slice(it).begin());
    add_force_source(it, g.slice(it));
  }
  return g;
}

BoundaryTrace KineticModel::nonlinear_wall_source(const BoundaryTrace& outgoing) const {
  BoundaryTrace r(outgoing.nt(), outgoing.nv(), TraceSide::incoming);
  for (std::size_t it = 0; it < outgoing.nt(); ++it)
    for (int w = 0; w < 2; ++w)
      kinetics::nonlinear_boundary_source(quad_, wall_maxwellian_[it], outgoing.wall(it, w), w,
                                          r.wall(it, w));
  return r;
}

PeriodicSolution PeriodicSolution::zeros(const PhaseGrid& grid) {
  return {grid.make_field(), grid.make_trace(TraceSide::outgoing), grid.make_trace(TraceSide::incoming)};
}

// ---------------------------------------------------------------------------

TransportStepper::TransportStepper(const KineticModel& model)
    : model_(model),
      nx_(model.space_time().nx()),
      nt_(model.space_time().nt()),
      nv_(model.velocity().size()),
      per_axis_(model.velocity().per_axis()),
      dt_(model.space_time().dt()) {
  const auto& vg = model.velocity();
  const auto& st = model.space_time();
  const auto& flow = model.flow();
  const auto& force = model.force();
  const std::size_t nc = nx_ + 2;
  std::vector<double> pos(nc);
  pos[0] = 0.0;
  for (std::size_t i = 0; i < nx_; ++i) pos[i + 1] = st.x(i);
  pos[nc - 1] = 1.0;
  const double h = vg.spacing();
  const double a0 = vg.axis(0);
  const auto nu = model.collision().nu();

  geometry_.resize(nt_ * nc * per_axis_);
  exponent_.assign(nt_ * nc * nv_, 0.0);
  for (std::size_t n = 0; n < nt_; ++n) {
    const double t = st.t(n);
    for (std::size_t c = 0; c < nc; ++c) {
      const double x = pos[c];
      for (std::size_t i1 = 0; i1 < per_axis_; ++i1) {
        const double v1 = vg.axis(i1);
        if ((c == 0 && v1 > 0.0) || (c == nc - 1 && v1 < 0.0)) continue;  // incoming wall nodes
        Departure d;
        d.used = true;
        const ExitData ex = flow.backward_exit(PhasePoint{t, x, {v1, 0.0, 0.0}}, dt_);
        double x_dep = ex.x_b;
        const double v_dep = ex.v_b[0];
        if (ex.capped) {
          d.tau = dt_;
        } else {
          d.exits = true;
          d.tau = ex.t_b;
          d.wall = ex.x_b < 0.5 ? 0 : 1;
          x_dep = d.wall == 0 ? 0.0 : 1.0;
        }
        x_dep = std::clamp(x_dep, 0.0, 1.0);
        std::size_t col = static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), x_dep) - pos.begin());
        col = std::clamp<std::size_t>(col, 1, nc - 1) - 1;
        d.col = col;
        d.wx = std::clamp((x_dep - pos[col]) / (pos[col + 1] - pos[col]), 0.0, 1.0);
        const double u = (v_dep - a0) / h;
        if (u <= 0.0) {
          d.j0 = 0;
          d.wv = 0.0;
        } else if (u >= static_cast<double>(per_axis_ - 1)) {
          d.j0 = per_axis_ - 2;
          d.wv = 1.0;
        } else {
          d.j0 = static_cast<std::size_t>(u);
          d.wv = u - static_cast<double>(d.j0);
        }
        if (d.exits) {
          // Boundary data exist only on the incoming half space of the exit wall.
          const auto side = TraceSide::incoming;
          if (!on_side(vg.axis(d.j0), d.wall, side)) d.wv = 1.0;
          if (!on_side(vg.axis(d.j0 + 1), d.wall, side)) d.wv = 0.0;
        }
        geometry_[(n * nc + c) * per_axis_ + i1] = d;

        const double g_arr = force(t, x);
        const double g_dep = force(t - d.tau, x_dep);
        for (std::size_t i = i1; i < nv_; i += per_axis_) {
          const auto& v = vg.node(i);
          double nu_dep = nu[i];
          if (v_dep != v1)
            nu_dep = collision_frequency(std::sqrt(v_dep * v_dep + v[1] * v[1] + v[2] * v[2]));
          const double m_arr = nu[i] - 0.5 * g_arr * v1;
          const double m_dep = nu_dep - 0.5 * g_dep * v_dep;
          exponent_[(n * nc + c) * nv_ + i] = 0.5 * d.tau * (m_arr + m_dep);
        }
      }
    }
  }
}

double TransportStepper::transport_value(std::size_t n, std::size_t c, std::size_t i, double lambda,
                                         std::span<const double> prev, std::span<const double> next,
                                         const double* src) const {
  const std::size_t i1 = i % per_axis_;
  const std::size_t base = i - i1;
  const Departure& d = departure(n, c, i1);
  const double a = exponent_[(n * (nx_ + 2) + c) * nv_ + i] + lambda * d.tau;
  const double damp = std::exp(-a);
  const double weight = d.tau * phi1(a);
  const std::size_t lo = base + d.j0;
  const std::size_t hi = lo + 1;
  auto at = [&](const double* data, std::size_t col) {
    const double* p = data + col * nv_;
    return (1.0 - d.wv) * p[lo] + d.wv * p[hi];
  };
  double value, source = 0.0;
  if (!d.exits) {
    value = (1.0 - d.wx) * at(prev.data(), d.col) + d.wx * at(prev.data(), d.col + 1);
    if (src) source = (1.0 - d.wx) * at(src, d.col) + d.wx * at(src, d.col + 1);
  } else {
    const std::size_t wc = d.wall == 0 ? 0 : nx_ + 1;
    const double theta = d.tau / dt_;
    value = (1.0 - theta) * at(next.data(), wc) + theta * at(prev.data(), wc);
    if (src) source = at(src, wc);
  }
  return damp * value + weight * source;
}

void TransportStepper::build_source(std::size_t n, std::span<const double> prev, const StepSpec& spec,
                                    std::vector<double>& src) const {
  const std::size_t pn = (n + nt_ - 1) % nt_;
  src.assign(state_size(), 0.0);
  double* interior = src.data() + nv_;
  if (spec.source) {
    const auto h = spec.source->slice(pn);
    std::copy(h.begin(), h.end(), interior);
  }
  if (spec.collision_K) {
    std::vector<double> kf(nx_ * nv_);
    model_.collision().apply_K_rows(prev.data() + nv_, kf.data(), nx_);
    for (std::size_t k = 0; k < kf.size(); ++k) interior[k] += kf[k];
  }
  if (spec.nonlinear) {
    // Gamma is refreshed on key slices and held in between; a march that starts
    // off a key slice evaluates it on its first state.
    const std::size_t key = model_.gamma_key(pn);
    if (key == pn || gamma_cache_slice_ != key) {
      gamma_cache_.assign(nx_ * nv_, 0.0);
      model_.gamma_slice(prev.subspan(nv_, nx_ * nv_), gamma_cache_);
      gamma_cache_slice_ = key;
    }
    std::span<double> in(interior, nx_ * nv_);
    for (std::size_t k = 0; k < gamma_cache_.size(); ++k) in[k] += gamma_cache_[k];
    model_.add_force_source(pn, in);
  }
  std::copy(src.begin() + static_cast<long>(nv_), src.begin() + static_cast<long>(2 * nv_), src.begin());
  std::copy(src.begin() + static_cast<long>(nx_ * nv_), src.begin() + static_cast<long>((nx_ + 1) * nv_),
            src.begin() + static_cast<long>((nx_ + 1) * nv_));
}

void TransportStepper::incoming(std::size_t n, const StepSpec& spec, std::span<double> next) const {
  const auto& vg = model_.velocity();
  const auto& quad = model_.quadrature();
  std::vector<double> reflected(nv_), extra(nv_);
  for (int w = 0; w < 2; ++w) {
    auto wall = next.subspan((w == 0 ? 0 : nx_ + 1) * nv_, nv_);
    if (spec.inflow) {
      const auto in = spec.inflow->wall(n, w);
      for (std::size_t i = 0; i < nv_; ++i)
        if (on_side(vg.node(i)[0], w, TraceSide::incoming)) wall[i] = in[i];
      continue;
    }
    p_gamma_wall(quad, wall, w, reflected);
    for (auto& x : reflected) x *= spec.reflection;
    if (spec.wall_source) {
      const auto r = spec.wall_source->wall(n, w);
      for (std::size_t i = 0; i < nv_; ++i) reflected[i] += r[i];
    }
    if (spec.nonlinear) {
      nonlinear_boundary_source(quad, model_.wall_maxwellian(n), wall, w, extra);
      for (std::size_t i = 0; i < nv_; ++i) reflected[i] += extra[i];
    }
    for (std::size_t i = 0; i < nv_; ++i)
      if (on_side(vg.node(i)[0], w, TraceSide::incoming)) wall[i] = reflected[i];
  }
}

void TransportStepper::step(std::size_t n, std::span<const double> prev, std::span<double> next,
                            const StepSpec& spec) const {
  const auto& vg = model_.velocity();
  std::vector<double> src_buf;
  const bool has_source = spec.source || spec.collision_K || spec.nonlinear;
  if (has_source) build_source(n, prev, spec, src_buf);
  const double* src = has_source ? src_buf.data() : nullptr;

  // Outgoing traces first: their departure points lie at the previous slice.
  for (int w = 0; w < 2; ++w) {
    const std::size_t c = w == 0 ? 0 : nx_ + 1;
    for (std::size_t i = 0; i < nv_; ++i)
      if (on_side(vg.node(i)[0], w, TraceSide::outgoing))
        next[c * nv_ + i] = transport_value(n, c, i, spec.lambda, prev, next, src);
  }
  incoming(n, spec, next);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 1; c <= nx_; ++c)
    for (std::size_t i = 0; i < nv_; ++i)
      next[c * nv_ + i] = transport_value(n, c, i, spec.lambda, prev, next, src);

  if (spec.mass_fix) {
    const double m = state_mass(next);
    const double norm = vg.maxwellian_mass();
    const auto sm = vg.sqrt_mu();
    for (std::size_t c = 1; c <= nx_; ++c)
      for (std::size_t i = 0; i < nv_; ++i) next[c * nv_ + i] -= m / norm * sm[i];
    max_mass_correction_ = std::max(max_mass_correction_, std::abs(m));
  }
}

double TransportStepper::state_mass(std::span<const double> state) const {
  const auto sm = model_.velocity().sqrt_mu();
  double s = 0.0;
  for (std::size_t c = 1; c <= nx_; ++c)
    for (std::size_t i = 0; i < nv_; ++i) s += state[c * nv_ + i] * sm[i];
  return s * model_.velocity().cell_volume() * model_.space_time().dx();
}

void TransportStepper::march_period(std::span<const double> start, std::span<double> end,
                                    const StepSpec& spec, PeriodicSolution* record) const {
  std::vector<double> a(start.begin(), start.end()), b(state_size());
  for (std::size_t n = 0; n < nt_; ++n) {
    step(n, a, b, spec);
    if (record) store(b, n, *record);
    std::swap(a, b);
  }
  std::copy(a.begin(), a.end(), end.begin());
}

std::vector<double> TransportStepper::state_of(const PeriodicSolution& s, std::size_t it) const {
  const auto& vg = model_.velocity();
  std::vector<double> state(state_size());
  for (std::size_t ix = 0; ix < nx_; ++ix) {
    const auto row = s.f.row(it, ix);
    std::copy(row.begin(), row.end(), state.begin() + static_cast<long>((ix + 1) * nv_));
  }
  for (int w = 0; w < 2; ++w) {
    const std::size_t c = w == 0 ? 0 : nx_ + 1;
    for (std::size_t i = 0; i < nv_; ++i)
      state[c * nv_ + i] = on_side(vg.node(i)[0], w, TraceSide::outgoing) ? s.outgoing.at(it, w, i)
                                                                          : s.incoming.at(it, w, i);
  }
  return state;
}

void TransportStepper::store(std::span<const double> state, std::size_t it, PeriodicSolution& out) const {
  const auto& vg = model_.velocity();
  for (std::size_t ix = 0; ix < nx_; ++ix) {
    auto row = out.f.row(it, ix);
    std::copy(state.begin() + static_cast<long>((ix + 1) * nv_),
              state.begin() + static_cast<long>((ix + 2) * nv_), row.begin());
  }
  for (int w = 0; w < 2; ++w) {
    const std::size_t c = w == 0 ? 0 : nx_ + 1;
    for (std::size_t i = 0; i < nv_; ++i) {
      const bool out_side = on_side(vg.node(i)[0], w, TraceSide::outgoing);
      out.outgoing.at(it, w, i) = out_side ? state[c * nv_ + i] : 0.0;
      out.incoming.at(it, w, i) = out_side ? 0.0 : state[c * nv_ + i];
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

PeriodicSolution sweep_to_periodic(const TransportStepper& stepper, StepSpec spec,
                                   const SolverSettings& settings, SweepReport* report,
                                   const std::vector<double>* warm, std::size_t fallback) {
  const auto& grid = stepper.model().grid();
  PeriodicSolution rec = PeriodicSolution::zeros(grid);
  std::vector<double> s = warm ? *warm : std::vector<double>(stepper.state_size(), 0.0);
  std::vector<double> e(stepper.state_size());
  const double tol = std::max(1e-2 * settings.tol_fix, 1e-15);
  SweepReport rep;
  double last_change = 0.0;
  for (std::size_t k = 0; k < settings.max_iter; ++k) {
    stepper.march_period(s, e, spec, &rec);
    const double change = relative(diff_norm(e, s), vec_norm(e));
    rep.sweeps = k + 1;
    rep.final_change = change;
    s.swap(e);
    if (change <= tol) {
      rep.converged = true;
      break;
    }
    if (k >= 2 && fallback > 0 && spec.reflection == 1.0 && last_change > 0.0 &&
        change / last_change >= 0.995)
      spec.reflection = 1.0 - 1.0 / static_cast<double>(fallback);
    last_change = change;
  }
  rep.reflection = spec.reflection;
  if (report) *report = rep;
  return rec;
}

double damping_factor(std::size_t n) { return n == 0 ? 1.0 : 1.0 - 1.0 / static_cast<double>(n); }

}  // namespace

PeriodicSolution inflow_periodic_solve(const TransportStepper& stepper, const DistributionField* g,
                                       const BoundaryTrace& inflow, double lambda,
                                       const SolverSettings& settings, SweepReport* report) {
  StepSpec spec;
  spec.lambda = lambda;
  spec.source = g;
  spec.inflow = &inflow;
  return sweep_to_periodic(stepper, spec, settings, report, nullptr, 0);
}

PeriodicSolution transport_solve(const TransportStepper& stepper, const DistributionField* h,
                                 const BoundaryTrace* r, double lambda,
                                 const SolverSettings& settings, SweepReport* report,
                                 const std::vector<double>* warm_state) {
  StepSpec spec;
  spec.lambda = lambda;
  spec.source = h;
  spec.wall_source = r;
  spec.reflection = damping_factor(settings.boundary_damping);
  return sweep_to_periodic(stepper, spec, settings, report, warm_state, settings.fallback_damping);
}

double BoundaryIterationReport::max_ratio() const {
  double m = 0.0;
  for (double r : boundary_ratios) m = std::max(m, r);
  return m;
}

PeriodicSolution boundary_fixed_point(const TransportStepper& stepper, const DistributionField* g,
                                      const BoundaryTrace* r, double lambda, std::size_t damping,
                                      const SolverSettings& settings,
                                      BoundaryIterationReport* report) {
  const auto& model = stepper.model();
  const auto& grid = model.grid();
  const double rho = damping_factor(damping);
  BoundaryIterationReport rep;
  if (damping > 0) {
    const double n = static_cast<double>(damping);
    rep.predicted_factor = std::sqrt(1.0 - 2.0 / n + 1.5 / (n * n));
  }
  PeriodicSolution f = PeriodicSolution::zeros(grid);
  double last_diff = 0.0;
  for (std::size_t i = 0; i < settings.max_iter; ++i) {
    BoundaryTrace in = p_gamma(model.quadrature(), f.outgoing);
    auto iv = in.values();
    for (auto& x : iv) x *= rho;
    if (r) {
      const auto rv = r->values();
      for (std::size_t k = 0; k < iv.size(); ++k) iv[k] += rv[k];
    }
    PeriodicSolution next = inflow_periodic_solve(stepper, g, in, lambda, settings);
    const double change = relative(norm_l2(grid, difference(next.f, f.f)), norm_l2(grid, next.f));
    const double diff = norm_boundary_l2pm(grid.velocity, difference(next.outgoing, f.outgoing));
    rep.residuals.push_back(change);
    rep.boundary_norms.push_back(norm_boundary_l2pm(grid.velocity, next.outgoing));
    if (i > 0 && last_diff > 0.0) rep.boundary_ratios.push_back(diff / last_diff);
    last_diff = diff;
    f = std::move(next);
    rep.iterations = i + 1;
    if (change <= settings.tol_fix) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = rep;
  return f;
}

double measured_lambda0(const CollisionOperator& op) { return op.k_operator_norm() + 2.0; }

double KIterationReport::max_energy_ratio() const {
  double m = 0.0;
  for (double r : energy_ratios) m = std::max(m, r);
  return m;
}

PeriodicSolution k_fixed_point(const TransportStepper& stepper, const DistributionField* g,
                               const BoundaryTrace* r, double lambda, const SolverSettings& settings,
                               KIterationReport* report) {
  const auto& model = stepper.model();
  const auto& grid = model.grid();
  const std::size_t nt = grid.space_time.nt(), nx = grid.space_time.nx();
  KIterationReport rep;
  rep.lambda = lambda;
  PeriodicSolution f = PeriodicSolution::zeros(grid);
  double last_energy = 0.0;
  for (std::size_t m = 0; m < settings.max_iter; ++m) {
    DistributionField h = g ? *g : grid.make_field();
    std::vector<double> kf(nx * grid.velocity.size());
    for (std::size_t it = 0; it < nt; ++it) {
      model.collision().apply_K_rows(f.f.slice(it).data(), kf.data(), nx);
      auto hs = h.slice(it);
      for (std::size_t k = 0; k < kf.size(); ++k) hs[k] += kf[k];
    }
    const std::vector<double> warm = stepper.state_of(f, nt - 1);
    PeriodicSolution next = transport_solve(stepper, &h, r, lambda, settings, nullptr, &warm);
    const double z = norm_l2(grid, difference(next.f, f.f));
    const double energy = z * z;
    if (m > 0 && last_energy > 0.0) rep.energy_ratios.push_back(energy / last_energy);
    last_energy = energy;
    const double change = relative(z, norm_l2(grid, next.f));
    rep.residuals.push_back(change);
    f = std::move(next);
    rep.iterations = m + 1;
    if (change <= settings.tol_fix) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = rep;
  return f;
}

PeriodicSolution periodic_linear_solve(const TransportStepper& stepper, const DistributionField* g,
                                       const BoundaryTrace* r, double lambda, bool zero_mass,
                                       const SolverSettings& settings, LinearSolveInfo* info,
                                       const std::vector<double>* warm_state) {
  const auto& grid = stepper.model().grid();
  const std::size_t n = stepper.state_size();
  StepSpec full;
  full.lambda = lambda;
  full.source = g;
  full.collision_K = true;
  full.reflection = damping_factor(settings.boundary_damping);
  full.wall_source = r;
  full.mass_fix = zero_mass;
  StepSpec homogeneous = full;
  homogeneous.source = nullptr;
  homogeneous.wall_source = nullptr;

  LinearSolveInfo out;
  out.lambda = lambda;
  PeriodicSolution rec = PeriodicSolution::zeros(grid);
  std::vector<double> zero(n, 0.0), c(n);
  stepper.march_period(zero, c, full);
  Eigen::Map<const Eigen::VectorXd> b(c.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (b.norm() > 0.0) {
    detail::ShootingOperator A(static_cast<Eigen::Index>(n), [&](const double* x, double* y) {
      std::span<const double> xs(x, n);
      std::span<double> ys(y, n);
      stepper.march_period(xs, ys, homogeneous);
      for (std::size_t k = 0; k < n; ++k) ys[k] = xs[k] - ys[k];
    });
    Eigen::GMRES<detail::ShootingOperator, Eigen::IdentityPreconditioner> gmres;
    gmres.set_restart(static_cast<Eigen::Index>(settings.gmres_restart));
    gmres.setMaxIterations(static_cast<Eigen::Index>(settings.max_iter));
    gmres.setTolerance(std::max(1e-2 * settings.tol_fix, 1e-15));
    gmres.compute(A);
    if (warm_state) {
      Eigen::Map<const Eigen::VectorXd> w(warm_state->data(), static_cast<Eigen::Index>(n));
      u = gmres.solveWithGuess(b, w);
    } else {
      u = gmres.solve(b);
    }
    out.iterations = static_cast<std::size_t>(gmres.iterations());
  }
  std::vector<double> start(u.data(), u.data() + n), end(n);
  stepper.march_period(start, end, full, &rec);
  out.residual = relative(diff_norm(end, start), vec_norm(end));
  out.converged = out.residual <= settings.tol_fix;
  if (info) *info = out;
  return rec;
}

PeriodicSolution lambda_bootstrap(const TransportStepper& stepper, const DistributionField* g,
                                  const BoundaryTrace* r, const SolverSettings& settings,
                                  BootstrapReport* report) {
  const auto& model = stepper.model();
  const auto& grid = model.grid();
  BootstrapReport rep;
  rep.lambda0 = settings.lambda0 > 0.0 ? settings.lambda0 : measured_lambda0(model.collision());
  const double lambda0 = rep.lambda0;

  if (is_zero(g) && is_zero(r)) {
    rep.rungs.push_back({0.0, lambda0, 0.0, {0.0, 0, 0.0, true}});
    if (report) *report = rep;
    return PeriodicSolution::zeros(grid);
  }

  // Resolvent bound C = ||S_{lambda0}^{-1}|| by a few power steps on zero-mass data.
  {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    DistributionField h = grid.make_field();
    for (auto& x : h.values()) x = uni(rng);
    double c = 0.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(settings.resolvent_samples, 1); ++k) {
      const double hn = norm_l2(grid, h);
      PeriodicSolution z = periodic_linear_solve(stepper, &h, nullptr, lambda0, false, settings);
      const double zn = norm_l2(grid, z.f);
      c = std::max(c, zn / hn);
      h = z.f;
      h.scale(1.0 / zn);
    }
    rep.resolvent_bound = c;
  }

  const double ideal = 1.0 / (2.0 * rep.resolvent_bound);
  auto rungs = static_cast<std::size_t>(std::ceil(lambda0 / ideal - 1e-12));
  if (rungs > settings.max_rungs) {
    rungs = settings.max_rungs;
    rep.schedule_capped = true;
  }
  rungs = std::max<std::size_t>(rungs, 1);
  const double step = lambda0 / static_cast<double>(rungs);

  PeriodicSolution f;
  std::vector<double> warm;
  for (std::size_t k = 0; k <= rungs; ++k) {
    const double lambda = k == rungs ? 0.0 : lambda0 - static_cast<double>(k) * step;
    RungRecord rung;
    rung.lambda = lambda;
    rung.step = k == 0 ? 0.0 : step;
    rung.contraction = rep.resolvent_bound * rung.step;
    f = periodic_linear_solve(stepper, g, r, lambda, true, settings, &rung.solve,
                              k == 0 ? nullptr : &warm);
    warm = stepper.state_of(f, grid.space_time.nt() - 1);
    rep.rungs.push_back(rung);
  }
  for (double m : slice_mass(grid, f.f)) rep.max_slice_mass = std::max(rep.max_slice_mass, std::abs(m));
  if (report) *report = rep;
  return f;
}

SteadyResult nonlinear_periodic_solve(const KineticModel& model, const SolverSettings& settings) {
  const auto& grid = model.grid();
  const auto& vg = grid.velocity;
  const auto& st = grid.space_time;
  TransportStepper stepper(model);
  SteadyResult res{PeriodicSolution::zeros(grid), {}};
  auto& rep = res.report;

  for (std::size_t it = 0; it < st.nt(); ++it) {
    double s = 0.0;
    for (std::size_t ix = 0; ix < st.nx(); ++ix) {
      const double g = model.force()(st.t(it), st.x(ix));
      for (std::size_t iv = 0; iv < vg.size(); ++iv) s += g * vg.node(iv)[0] * vg.mu()[iv];
    }
    rep.source_mass = std::max(rep.source_mass, std::abs(s) * vg.cell_volume() * st.dx());
  }

  PeriodicSolution& f = res.solution;
  for (std::size_t j = 0; j < settings.max_iter; ++j) {
    const DistributionField g = model.nonlinear_volume_source(f.f);
    const BoundaryTrace r = model.nonlinear_wall_source(f.outgoing);
    PeriodicSolution next;
    OuterRecord rec;
    rec.iteration = j + 1;
    if (j == 0) {
      next = lambda_bootstrap(stepper, &g, &r, settings, &rep.bootstrap);
      for (const auto& rung : rep.bootstrap.rungs) rec.linear_iterations += rung.solve.iterations;
      rec.linear_residual = rep.bootstrap.rungs.back().solve.residual;
    } else {
      LinearSolveInfo info;
      const auto warm = stepper.state_of(f, st.nt() - 1);
      next = periodic_linear_solve(stepper, &g, &r, 0.0, true, settings, &info, &warm);
      rec.linear_iterations = info.iterations;
      rec.linear_residual = info.residual;
    }
    rec.change = norm_weighted_sup(grid, difference(next.f, f.f), model.weight());
    rec.weighted_sup = norm_weighted_sup(grid, next.f, model.weight());
    rec.boundary_sup = std::max(norm_boundary_suppm(vg, next.outgoing, model.weight()),
                                norm_boundary_suppm(vg, next.incoming, model.weight()));
    rep.outer.push_back(rec);
    f = std::move(next);
    if (rec.change <= settings.tol_outer) {
      rep.converged = true;
      break;
    }
  }
  const double delta = model.delta();
  const double final_sup = rep.outer.empty() ? 0.0 : rep.outer.back().weighted_sup;
  if (delta > 0.0) {
    rep.c_hat = final_sup / delta;
    for (const auto& o : rep.outer)
      if (o.weighted_sup > 2.0 * rep.c_hat * delta * (1.0 + 1e-12)) rep.stayed_in_ball = false;
  }
  for (double m : slice_mass(grid, f.f)) rep.max_slice_mass = std::max(rep.max_slice_mass, std::abs(m));
  return res;
}

DistributionField to_F(const VelocityGrid& grid, const DistributionField& f) {
  DistributionField F = f;
  F.normalization = Normalization::F;
  const std::size_t nv = grid.size();
  auto v = F.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::size_t iv = k % nv;
    v[k] = grid.mu()[iv] + grid.sqrt_mu()[iv] * v[k];
  }
  return F;
}

PeriodicResidual periodic_residual(const PhaseGrid& grid, const DistributionField& a,
                                   const DistributionField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("periodic_residual: shape mismatch");
  PeriodicResidual res;
  const DistributionField d = difference(a, b);
  for (std::size_t it = 0; it < d.nt(); ++it) res.l2 = std::max(res.l2, slice_norm_l2(grid, d, it));
  for (double x : d.values()) res.sup = std::max(res.sup, std::abs(x));
  return res;
}

IterationLemmaResult iteration_lemma_check(std::span<const double> a, std::size_t k, double D) {
  IterationLemmaResult res;
  const std::size_t N = a.size();
  if (N < k + 2) return res;
  auto A = [&](std::size_t i) { return *std::max_element(a.begin() + static_cast<long>(i),
                                                          a.begin() + static_cast<long>(i + k + 1)); };
  for (std::size_t i = 0; i + k + 1 < N; ++i)
    if (a[i + k + 1] > A(i) / 8.0 + D * (1.0 + 1e-12) + 1e-300) res.hypothesis = false;
  if (N < 2 * k + 2) return res;
  double head = 0.0;
  for (std::size_t i = 0; i <= k; ++i) head = std::max(head, A(i));
  const double tail = (8.0 + static_cast<double>(k)) / 7.0 * D;
  for (std::size_t i = k + 1; i + k < N; ++i) {
    const double bound = std::pow(0.125, static_cast<double>(i / (k + 1))) * head + tail;
    res.bound.push_back(bound);
    if (A(i) > bound * (1.0 + 1e-12)) res.conclusion = false;
  }
  return res;
}

}  // namespace kinetics
