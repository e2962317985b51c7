#include "kinetics/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <omp.h>

#include <Eigen/LU>

namespace kinetics {

namespace {

constexpr double wall_tolerance = 1e-12;

struct Hermite {
  // Cubic through (0, y0, d0) and (len, y1, d1); u in [0, 1].
  double y0, y1, d0, d1, len;
  double operator()(double u) const {
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * len * d0 + (-2 * u3 + 3 * u2) * y1 +
           (u3 - u2) * len * d1;
  }
};

struct OdeState {
  double x, v;
};

OdeState rk4_step(const ForceField& g, double s, OdeState y, double h) {
  auto rhs = [&](double t, OdeState z) { return OdeState{z.v, g(t, z.x)}; };
  const OdeState k1 = rhs(s, y);
  const OdeState k2 = rhs(s + 0.5 * h, {y.x + 0.5 * h * k1.x, y.v + 0.5 * h * k1.v});
  const OdeState k3 = rhs(s + 0.5 * h, {y.x + 0.5 * h * k2.x, y.v + 0.5 * h * k2.v});
  const OdeState k4 = rhs(s + h, {y.x + h * k3.x, y.v + h * k3.v});
  return {y.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
          y.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
}

// Locate the wall crossing inside one step [s0, s1] (s1 may be < s0).
struct Crossing {
  double s, x_wall, v;
};

Crossing locate_crossing(const ForceField& g, double s0, OdeState y0, double s1, OdeState y1) {
  const double wall = (y1.x < 0.0) ? 0.0 : 1.0;
  const double len = s1 - s0;
  const Hermite xs{y0.x, y1.x, y0.v, y1.v, len};
  const Hermite vs{y0.v, y1.v, g(s0, y0.x), g(s1, y1.x), len};
  // f(u) = X(u) - wall changes sign on [0, 1]; bisection on u.
  double lo = 0.0, hi = 1.0;
  const double f_lo = xs(lo) - wall;
  for (int i = 0; i < 200 && (hi - lo) * std::abs(len) > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = xs(mid) - wall;
    if (std::abs(f_mid) <= 0.01 * wall_tolerance) {
      lo = hi = mid;
      break;
    }
    if ((f_mid > 0) == (f_lo > 0)) lo = mid; else hi = mid;
  }
  const double u = 0.5 * (lo + hi);
  return {s0 + u * len, wall, vs(u)};
}

bool outside(double x) { return x < 0.0 || x > 1.0; }

}  // namespace

ForceField::ForceField(Profile offset, Profile slope, double period)
    : offset_(std::move(offset)), slope_(std::move(slope)), period_(period) {}

ForceField ForceField::zero() {
  return ForceField([](double) { return 0.0; }, [](double) { return 0.0; }, 0.0);
}

ForceField ForceField::constant(double g0) {
  return ForceField([g0](double) { return g0; }, [](double) { return 0.0; }, 0.0);
}

ForceField ForceField::from_clock(const FrameClock& clock) {
  return ForceField([](double) { return 0.0; },
                    [clock](double tbar) { return force_slope(clock, tbar); },
                    clock.transformed_period());
}

double ForceField::sup_norm(std::size_t samples) const {
  const double window = period_ > 0.0 ? period_ : 1.0;
  double m = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = window * static_cast<double>(i) / static_cast<double>(samples);
    m = std::max({m, std::abs(offset_(t)), std::abs(offset_(t) + slope_(t))});
  }
  return m;
}

namespace {

ForceField::Profile periodic_table(const ForceField::Profile& f, double period, std::size_t n) {
  auto table = std::make_shared<std::vector<double>>(n);
  const double h = period / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) (*table)[i] = f(h * static_cast<double>(i));
  return [table, period, h, n](double t) {
    const double r = t - period * std::floor(t / period);
    const double pos = r / h;
    const double fl = std::floor(pos);
    const double u = pos - fl;
    const auto i = static_cast<long>(fl);
    const auto& y = *table;
    auto at = [&](long j) { return y[static_cast<std::size_t>(((j % static_cast<long>(n)) + n) % n)]; };
    // Cubic Lagrange through nodes i-1 .. i+2.
    const double ym = at(i - 1), y0 = at(i), y1 = at(i + 1), y2 = at(i + 2);
    return -u * (u - 1.0) * (u - 2.0) / 6.0 * ym + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * y0 -
           (u + 1.0) * u * (u - 2.0) / 2.0 * y1 + (u + 1.0) * u * (u - 1.0) / 6.0 * y2;
  };
}

}  // namespace

ForceField ForceField::tabulated(std::size_t samples) const {
  if (period_ <= 0.0) return *this;
  return ForceField(periodic_table(offset_, period_, samples),
                    periodic_table(slope_, period_, samples), period_);
}

PhasePoint Trajectory::end() const {
  PhasePoint p = start;
  if (!samples.empty()) {
    p.t = samples.back().s;
    p.x = samples.back().x;
    p.v[0] = samples.back().v1;
  }
  return p;
}

double default_ode_step(const ForceField& g) {
  return (g.period() > 0.0 ? g.period() : 1.0) / 2048.0;
}

Trajectory integrate(const PhasePoint& p, double s_target, const ForceField& g, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  Trajectory traj;
  traj.start = p;
  traj.samples.push_back({p.t, p.x, p.v[0]});
  const double span = s_target - p.t;
  const auto steps = static_cast<std::size_t>(std::ceil(std::abs(span) / h - 1e-9));
  if (steps == 0) return traj;
  const double step = span / static_cast<double>(steps);
  OdeState y{p.x, p.v[0]};
  double s = p.t;
  for (std::size_t i = 0; i < steps; ++i) {
    const double s_next = (i + 1 == steps) ? s_target : p.t + step * static_cast<double>(i + 1);
    const OdeState y_next = rk4_step(g, s, y, s_next - s);
    if (outside(y_next.x) && !outside(y.x)) {
      const Crossing c = locate_crossing(g, s, y, s_next, y_next);
      traj.samples.push_back({c.s, c.x_wall, c.v});
      traj.termination = c.x_wall == 0.0 ? Termination::exited_left : Termination::exited_right;
      return traj;
    }
    s = s_next;
    y = y_next;
    traj.samples.push_back({s, y.x, y.v});
  }
  return traj;
}

ExitData backward_exit(const PhasePoint& p, const ForceField& g, double t_cap, double h) {
  ExitData out;
  out.v_b = p.v;
  if ((p.x <= 0.0 && p.v[0] > 0.0) || (p.x >= 1.0 && p.v[0] < 0.0)) {
    out.x_b = p.x <= 0.0 ? 0.0 : 1.0;
    return out;
  }
  OdeState y{std::clamp(p.x, 0.0, 1.0), p.v[0]};
  double s = p.t;
  const double s_end = p.t - t_cap;
  while (s > s_end) {
    const double s_next = std::max(s - h, s_end);
    const OdeState y_next = rk4_step(g, s, y, s_next - s);
    if (outside(y_next.x)) {
      const Crossing c = locate_crossing(g, s, y, s_next, y_next);
      out.t_b = p.t - c.s;
      out.x_b = c.x_wall;
      out.v_b[0] = c.v;
      return out;
    }
    s = s_next;
    y = y_next;
  }
  out.t_b = t_cap;
  out.x_b = y.x;
  out.v_b[0] = y.v;
  out.capped = true;
  return out;
}

FlowMap::FlowMap(const ForceField& g, std::size_t steps_per_period)
    : force_(g), period_(g.period() > 0.0 ? g.period() : 1.0), steps_(steps_per_period) {
  const double h = step();
  auto generator = [&](double s) {
    Mat3 a = Mat3::Zero();
    a(0, 1) = 1.0;
    a(1, 0) = force_.slope(s);
    a(1, 2) = force_.offset(s);
    return a;
  };
  phi_.resize(steps_ + 1);
  dphi_.resize(steps_ + 1);
  phi_[0] = Mat3::Identity();
  double bound = 0.0;
  for (std::size_t k = 0; k <= steps_; ++k) {
    const double s = h * static_cast<double>(k);
    const Mat3 a = generator(s);
    bound = std::max({bound, std::abs(a(1, 2)), std::abs(a(1, 2) + a(1, 0))});
    dphi_[k] = a * phi_[k];
    if (k == steps_) break;
    const Mat3 a_mid = generator(s + 0.5 * h);
    const Mat3 a_end = generator(s + h);
    const Mat3 k1 = dphi_[k];
    const Mat3 k2 = a_mid * (phi_[k] + 0.5 * h * k1);
    const Mat3 k3 = a_mid * (phi_[k] + 0.5 * h * k2);
    const Mat3 k4 = a_end * (phi_[k] + h * k3);
    phi_[k + 1] = phi_[k] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    bound = std::max(bound, std::abs(a_mid(1, 2)) + std::abs(a_mid(1, 0)));
  }
  force_bound_ = 1.05 * bound + 1e-14;
  const Mat3 m = phi_[steps_];
  const Mat3 m_inv = m.inverse();
  powers_.assign(2 * power_cache + 1, Mat3::Identity());
  for (long n = 1; n <= power_cache; ++n) {
    powers_[power_cache + n] = powers_[power_cache + n - 1] * m;
    powers_[power_cache - n] = powers_[power_cache - n + 1] * m_inv;
  }
}

FlowMap::Mat3 FlowMap::fundamental_reduced(double r) const {
  const double h = step();
  double pos = r / h;
  auto k = static_cast<std::size_t>(pos);
  if (k >= steps_) k = steps_ - 1;
  const double u = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
  const double u2 = u * u, u3 = u2 * u;
  const double c0 = 2 * u3 - 3 * u2 + 1, c1 = (u3 - 2 * u2 + u) * h, c2 = -2 * u3 + 3 * u2,
               c3 = (u3 - u2) * h;
  return c0 * phi_[k] + c1 * dphi_[k] + c2 * phi_[k + 1] + c3 * dphi_[k + 1];
}

const FlowMap::Mat3& FlowMap::monodromy_power(long n) const {
  if (std::abs(n) > power_cache)
    throw std::out_of_range("FlowMap: trace spans more periods than cached");
  return powers_[static_cast<std::size_t>(n + power_cache)];
}

std::array<double, 2> FlowMap::propagate(double t, double x, double v1, double s) const {
  return path(t, x, v1).at(s);
}

FlowMap::Path FlowMap::path(double t, double x, double v1) const {
  Path p;
  p.flow_ = this;
  p.n_ref_ = std::floor(t / period_);
  const double rt = std::clamp(t - p.n_ref_ * period_, 0.0, period_);
  p.z_ = fundamental_reduced(rt).partialPivLu().solve(Eigen::Vector3d(x, v1, 1.0));
  return p;
}

std::array<double, 2> FlowMap::Path::at(double s) const {
  const double period = flow_->period_;
  const double ns = std::floor(s / period);
  const double rs = std::clamp(s - ns * period, 0.0, period);
  const Eigen::Vector3d out =
      flow_->fundamental_reduced(rs) * (flow_->monodromy_power(static_cast<long>(ns - n_ref_)) * z_);
  return {out[0], out[1]};
}

ExitData FlowMap::backward_exit(const PhasePoint& p, double t_cap) const {
  ExitData out;
  out.v_b = p.v;
  const double x0 = std::clamp(p.x, 0.0, 1.0);
  if ((x0 <= 0.0 && p.v[0] > 0.0) || (x0 >= 1.0 && p.v[0] < 0.0)) {
    out.x_b = x0 <= 0.0 ? 0.0 : 1.0;
    return out;
  }
  const Path path = this->path(p.t, x0, p.v[0]);
  auto state_at = [&](double s) {
    const auto y = path.at(s);
    return OdeState{y[0], y[1]};
  };
  const double gb = force_bound_;
  // Lower bound on the backward time needed to close a gap d with approach speed u.
  auto reach_time = [gb](double d, double u) {
    d = std::max(d, 0.0);
    const double disc = std::sqrt(u * u + 2.0 * gb * d);
    const double denom = u + disc;
    return denom > 0.0 ? 2.0 * d / denom : std::numeric_limits<double>::infinity();
  };
  double elapsed = 0.0;
  OdeState y{x0, p.v[0]};
  for (int iter = 0; iter < 100000; ++iter) {
    const double tau0 = reach_time(y.x, y.v);
    const double tau1 = reach_time(1.0 - y.x, -y.v);
    const bool at_left = y.x <= wall_tolerance && y.v > 0.0 && elapsed > 0.0;
    const bool at_right = 1.0 - y.x <= wall_tolerance && y.v < 0.0 && elapsed > 0.0;
    if (at_left || at_right) {
      out.t_b = elapsed;
      out.x_b = at_left ? 0.0 : 1.0;
      out.v_b[0] = y.v;
      return out;
    }
    double tau = std::min(tau0, tau1);
    // Avoid Zeno stalls: once within tolerance, nudge by a tiny step.
    tau = std::max(tau, 1e-15 * std::max(1.0, elapsed));
    if (elapsed + tau >= t_cap) {
      y = state_at(p.t - t_cap);
      out.t_b = t_cap;
      out.x_b = y.x;
      out.v_b[0] = y.v;
      out.capped = true;
      return out;
    }
    elapsed += tau;
    y = state_at(p.t - elapsed);
    if (y.x < 0.0 || y.x > 1.0) {
      // Numerical overshoot of the bound; the crossing is within roundoff.
      out.t_b = elapsed;
      out.x_b = y.x < 0.0 ? 0.0 : 1.0;
      out.v_b[0] = y.v;
      return out;
    }
  }
  throw std::runtime_error("FlowMap::backward_exit did not converge");
}

PeriodicityReport periodicity_check(const ForceField& g, std::size_t n_samples,
                                    std::uint64_t seed, double h) {
  PeriodicityReport rep;
  const double period = g.period() > 0.0 ? g.period() : 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = period * unit(rng);
    const PhasePoint p{t, 0.02 + 0.96 * unit(rng), {6.0 * unit(rng) - 3.0, unit(rng), unit(rng)}};
    const double s = t - 0.5 * period * unit(rng);
    PhasePoint q = p;
    q.t += period;
    const Trajectory a = integrate(p, s, g, h);
    const Trajectory b = integrate(q, s + period, g, h);
    const PhasePoint ea = a.end(), eb = b.end();
    rep.max_state_deviation =
        std::max({rep.max_state_deviation, std::abs(ea.x - eb.x), std::abs(ea.v[0] - eb.v[0]),
                  std::abs((eb.t - period) - ea.t)});
    const ExitData xa = backward_exit(p, g, 8.0 * period, h);
    const ExitData xb = backward_exit(q, g, 8.0 * period, h);
    rep.max_exit_time_deviation = std::max(rep.max_exit_time_deviation, std::abs(xa.t_b - xb.t_b));
    rep.max_exit_velocity_deviation =
        std::max(rep.max_exit_velocity_deviation, std::abs(xa.v_b[0] - xb.v_b[0]));
    // A capped exit stops inside the slab, so only uncapped exits carry a wall.
    if (xa.capped != xb.capped || (!xa.capped && xa.x_b != xb.x_b)) rep.exit_wall_mismatch = true;
  }
  return rep;
}

std::vector<double> Cycle::times() const {
  std::vector<double> ts;
  ts.push_back(start.t);
  for (const CycleLeg& leg : legs) ts.push_back(leg.t);
  return ts;
}

Velocity CycleRng::sample_wall_velocity(double x_wall) {
  double a = 0.0;
  do {
    const double u = uniform_(engine_);
    a = std::sqrt(-2.0 * std::log1p(-u));
  } while (a < 1e-8);
  const double sign = x_wall < 0.5 ? -1.0 : 1.0;
  const double v2 = normal_(engine_);
  const double v3 = normal_(engine_);
  return {sign * a, v2, v3};
}

namespace {

// Leg from (t, x, v) backward to its exit; damping by composite Simpson.
struct LegResult {
  ExitData exit;
  double damping;
};

LegResult trace_leg(const FlowMap& flow, double t, double x, const Velocity& v,
                    const LegMultiplier* multiplier, double t_cap) {
  LegResult r{flow.backward_exit({t, x, v}, t_cap), 1.0};
  if (multiplier == nullptr || r.exit.t_b <= 0.0) return r;
  const double duration = r.exit.t_b;
  auto m = static_cast<std::size_t>(std::ceil(duration / (flow.period() / 16.0)));
  m = std::clamp<std::size_t>(m + (m % 2), 2, 64);
  const double dt = duration / static_cast<double>(m);
  double integral = 0.0;
  const FlowMap::Path path = flow.path(t, x, v[0]);
  for (std::size_t j = 0; j <= m; ++j) {
    const double s = t - dt * static_cast<double>(j);
    const auto xv = path.at(s);
    const double wgt = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    integral += wgt * (*multiplier)(s, std::clamp(xv[0], 0.0, 1.0), {xv[1], v[1], v[2]});
  }
  r.damping = std::exp(-integral * dt / 3.0);
  return r;
}

}  // namespace

Cycle sample_cycle(const FlowMap& flow, const PhasePoint& p, std::size_t k, CycleRng& rng,
                   const LegMultiplier& multiplier, double t_cap) {
  if (k == 0) throw std::invalid_argument("sample_cycle: k >= 1 required");
  const LegMultiplier* mult = multiplier ? &multiplier : nullptr;
  Cycle cycle;
  cycle.start = p;
  double t = p.t, x = p.x;
  Velocity v = p.v;
  for (std::size_t l = 0; l < k; ++l) {
    const LegResult leg = trace_leg(flow, t, x, v, mult, t_cap);
    const Velocity v_end{leg.exit.v_b[0], v[1], v[2]};
    cycle.legs.push_back({t - leg.exit.t_b, leg.exit.x_b, v, v_end, leg.damping});
    if (leg.exit.capped) {
      cycle.capped = true;
      break;
    }
    t -= leg.exit.t_b;
    x = leg.exit.x_b;
    if (l + 1 < k) v = rng.sample_wall_velocity(x);
  }
  return cycle;
}

std::vector<CycleMeasureEstimate> cycle_measure_estimate(const FlowMap& flow,
                                                         const CycleMeasureOptions& opt,
                                                         const LegMultiplier& multiplier,
                                                         const VelocityWeight& wtilde) {
  if (opt.ks.empty()) return {};
  const std::size_t k_max = *std::max_element(opt.ks.begin(), opt.ks.end());
  const double s_floor = opt.start.t - opt.t0;
  const LegMultiplier* mult = (opt.damping && multiplier) ? &multiplier : nullptr;
  const bool use_ratio = opt.weight_ratio && static_cast<bool>(wtilde);

  // Deterministic first leg unless the start velocity is sampled.
  LegResult first{};
  if (!opt.start_on_wall) first = trace_leg(flow, opt.start.t, opt.start.x, opt.start.v, nullptr, opt.t0);

  constexpr std::size_t tasks = 64;
  std::vector<std::vector<double>> sum(tasks, std::vector<double>(k_max + 1, 0.0));
  std::vector<std::vector<double>> sum_sq(tasks, std::vector<double>(k_max + 1, 0.0));

#pragma omp parallel for schedule(static)
  for (std::size_t task = 0; task < tasks; ++task) {
    CycleRng rng(opt.seed + task);
    const std::size_t begin = opt.samples * task / tasks;
    const std::size_t end = opt.samples * (task + 1) / tasks;
    std::vector<double>& acc = sum[task];
    std::vector<double>& acc2 = sum_sq[task];
    for (std::size_t n = begin; n < end; ++n) {
      double t = opt.start.t;
      double x = opt.start.x;
      ExitData leg0;
      if (opt.start_on_wall) {
        const Velocity v0 = rng.sample_wall_velocity(x);
        leg0 = trace_leg(flow, t, x, v0, nullptr, opt.t0).exit;
      } else {
        leg0 = first.exit;
      }
      if (leg0.capped || t - leg0.t_b <= s_floor) continue;
      t -= leg0.t_b;
      x = leg0.x_b;
      // k = 1: indicator of the first leg only.
      acc[1] += 1.0;
      acc2[1] += 1.0;
      double weight = 1.0;
      for (std::size_t l = 1; l < k_max; ++l) {
        const Velocity v = rng.sample_wall_velocity(x);
        const LegResult leg = trace_leg(flow, t, x, v, mult, t - s_floor);
        if (leg.exit.capped) break;
        const Velocity v_end{leg.exit.v_b[0], v[1], v[2]};
        weight *= leg.damping;
        if (use_ratio) weight *= wtilde(v) / wtilde(v_end);
        t -= leg.exit.t_b;
        x = leg.exit.x_b;
        if (t <= s_floor || weight == 0.0) break;
        acc[l + 1] += weight;
        acc2[l + 1] += weight * weight;
      }
    }
  }

  std::vector<CycleMeasureEstimate> out;
  const double n = static_cast<double>(opt.samples);
  for (std::size_t k : opt.ks) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t task = 0; task < tasks; ++task) {
      s1 += sum[task][k];
      s2 += sum_sq[task][k];
    }
    const double mean = s1 / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    out.push_back({k, mean, std::sqrt(var / n)});
  }
  return out;
}

}  // namespace kinetics
