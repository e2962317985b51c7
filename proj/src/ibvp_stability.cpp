#include "kinetics/ibvp_stability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <stdexcept>

namespace kinetics {

namespace {

StepSpec full_step(bool mass_fix) {
  StepSpec s;
  s.collision_K = true;
  s.nonlinear = true;
  s.mass_fix = mass_fix;
  return s;
}

// Total mass int int F of the interior part of a state.
double total_mass(const KineticModel& model, std::span<const double> state) {
  const auto& vg = model.velocity();
  const std::size_t nx = model.space_time().nx(), nv = vg.size();
  double s = 0.0;
  for (std::size_t c = 1; c <= nx; ++c)
    for (std::size_t i = 0; i < nv; ++i) s += vg.mu()[i] + vg.sqrt_mu()[i] * state[c * nv + i];
  return s * vg.cell_volume() * model.space_time().dx();
}

}  // namespace

StabilityRun ibvp_march(const KineticModel& model, const PeriodicSolution& f_per,
                        std::span<const double> f0, std::size_t periods, const MarchOptions& options) {
  const auto& vg = model.velocity();
  const auto& st = model.space_time();
  const std::size_t nx = st.nx(), nt = st.nt(), nv = vg.size();
  if (f0.size() != nx * nv) throw std::invalid_argument("ibvp_march: initial data has the wrong size");
  const TransportStepper stepper(model);
  const StepSpec spec = full_step(options.mass_fix);
  const double dxdv = st.dx() * vg.cell_volume();
  const auto sm = vg.sqrt_mu();

  StabilityRun run;
  run.periods = periods;
  run.period = st.period();

  std::vector<double> a = stepper.state_of(f_per, nt - 1), b(stepper.state_size());
  for (std::size_t k = 0; k < nx * nv; ++k) a[nv + k] += f0[k];
  for (std::size_t k = 0; k < nx * nv; ++k)
    run.initial_weighted_sup = std::max(run.initial_weighted_sup, std::abs(f0[k]) * model.weight()(vg.node(k % nv)));

  std::vector<double> pert(nx * nv);
  for (std::size_t p = 0; p < periods && !run.blew_up; ++p) {
    double distance = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
      stepper.step(n, a, b, spec);
      std::swap(a, b);
      SliceRecord rec;
      rec.t = static_cast<double>(p * nt + n + 1) * st.dt();
      rec.min_F = std::numeric_limits<double>::infinity();
      double l2 = 0.0;
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const auto per = f_per.f.row(n, ix);
        for (std::size_t iv = 0; iv < nv; ++iv) {
          const double tot = a[(ix + 1) * nv + iv];
          const double f = tot - per[iv];
          pert[ix * nv + iv] = f;
          l2 += f * f;
          rec.weighted_sup = std::max(rec.weighted_sup, std::abs(f) * model.weight()(vg.node(iv)));
          rec.mass += f * sm[iv];
          rec.min_F = std::min(rec.min_F, vg.mu()[iv] + sm[iv] * tot);
        }
      }
      rec.l2 = std::sqrt(l2 * dxdv);
      rec.mass *= dxdv;
      rec.total_mass = total_mass(model, a);
      distance = std::max(distance, rec.l2);
      run.history.push_back(rec);
      // The floor keeps roundoff on a zero perturbation from counting as growth.
      if (!std::isfinite(rec.weighted_sup) ||
          rec.weighted_sup > options.blowup_factor * std::max(run.initial_weighted_sup, 1e-6)) {
        run.blew_up = true;
        break;
      }
    }
    if (!run.blew_up) {
      run.period_distance.push_back(distance);
      run.completed = p + 1;
    }
  }
  run.final_state = pert;
  run.max_mass_correction = stepper.max_mass_correction();
  return run;
}

std::vector<double> default_initial_perturbation(const KineticModel& model, double target,
                                                 std::uint64_t seed) {
  const auto& vg = model.velocity();
  const auto& st = model.space_time();
  const std::size_t nx = st.nx(), nv = vg.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre_x(0.35, 0.65), centre_v(-0.75, 0.75);
  const double x0 = centre_x(rng);
  const Velocity c{centre_v(rng), centre_v(rng), centre_v(rng)};

  std::vector<double> f(nx * nv), bump(nv), proj(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const auto& v = vg.node(iv);
    const double d2 = (v[0] - c[0]) * (v[0] - c[0]) + (v[1] - c[1]) * (v[1] - c[1]) + (v[2] - c[2]) * (v[2] - c[2]);
    bump[iv] = std::exp(-0.5 * d2);
  }
  model.collision().complement_P(bump, proj);
  double sup = 0.0;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double dx = st.x(ix) - x0;
    const double shape = std::exp(-dx * dx / 0.02);
    for (std::size_t iv = 0; iv < nv; ++iv) {
      f[ix * nv + iv] = shape * proj[iv];
      sup = std::max(sup, std::abs(f[ix * nv + iv]) * model.weight()(vg.node(iv)));
    }
  }
  if (sup > 0.0)
    for (auto& x : f) x *= target / sup;
  return f;
}

DecayFit decay_rate_fit(std::span<const double> t, std::span<const double> values, double period,
                        double tail, double initial, double origin) {
  DecayFit fit;
  if (t.size() != values.size() || t.empty()) {
    fit.reason = "empty history";
    return fit;
  }
  const double t_end = t.back();
  const double t_begin = std::isnan(origin) ? t.front() : origin;
  if (period > 0.0 && t_end - t_begin < 5.0 * period * (1.0 - 1e-9)) {
    fit.reason = "fewer than 5 periods of history";
    return fit;
  }
  double t_cut = t_end - tail * (t_end - t_begin);
  if (period > 0.0) t_cut = t_begin + std::floor((t_cut - t_begin) / period + 1e-9) * period + 1e-12 * period;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_cut) continue;
    if (!(values[i] > 0.0)) {
      fit.reason = "non-positive norm in the tail";
      return fit;
    }
    pts.emplace_back(t[i], std::log(values[i]));
  }
  fit.samples = pts.size();
  if (pts.size() < 3) {
    fit.reason = "too few samples in the tail";
    return fit;
  }
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(pts.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - slope * sx) / m;
  fit.rate = -slope;
  const double mean = sy / m;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = y - (fit.intercept + slope * x);
    ss_res += r * r;
    ss_tot += (y - mean) * (y - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  // Per-period maxima over the tail.
  std::vector<double> maxima;
  if (period > 0.0) {
    long current = -1;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < t_cut) continue;
      const long k = static_cast<long>(std::floor((t[i] - t_begin) / period - 1e-9));
      if (k != current) {
        maxima.push_back(values[i]);
        current = k;
      } else {
        maxima.back() = std::max(maxima.back(), values[i]);
      }
    }
  } else {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= t_cut) maxima.push_back(values[i]);
  }
  fit.monotone_tail = true;
  for (std::size_t k = 1; k < maxima.size(); ++k)
    if (maxima[k] >= maxima[k - 1]) fit.monotone_tail = false;

  const double ref = initial > 0.0 ? initial : values.front();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_cut) fit.envelope = std::max(fit.envelope, values[i] * std::exp(fit.rate * t[i]) / ref);

  if (!fit.monotone_tail) {
    fit.reason = "non-monotone tail";
    return fit;
  }
  fit.accepted = true;
  return fit;
}

DecayFit decay_rate_fit(const StabilityRun& run, double tail) {
  std::vector<double> t, v;
  for (const auto& r : run.history) {
    t.push_back(r.t);
    v.push_back(r.weighted_sup);
  }
  return decay_rate_fit(t, v, run.period, tail, run.initial_weighted_sup, 0.0);
}

PositivityReport positivity_check(const VelocityGrid& grid, const DistributionField& F) {
  PositivityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < F.nt(); ++it)
    for (std::size_t ix = 0; ix < F.nx(); ++ix)
      for (std::size_t iv = 0; iv < F.nv(); ++iv) {
        const double v = F.at(it, ix, iv);
        rep.max_value = std::max(rep.max_value, v);
        if (v < rep.min_value) {
          rep.min_value = v;
          rep.it = it;
          rep.ix = ix;
          rep.iv = iv;
        }
      }
  rep.velocity = grid.node(rep.iv);
  rep.pass = rep.min_value >= -1e-10 * rep.max_value;
  return rep;
}

MassDrift mass_conservation_check(const KineticModel& model, std::size_t periods,
                                  std::span<const double> f_start) {
  const std::size_t nx = model.space_time().nx(), nt = model.space_time().nt();
  const std::size_t nv = model.velocity().size();
  const TransportStepper stepper(model);
  std::vector<double> a(stepper.state_size(), 0.0), b(stepper.state_size());
  if (!f_start.empty()) {
    if (f_start.size() != nx * nv) throw std::invalid_argument("mass_conservation_check: wrong start size");
    std::copy(f_start.begin(), f_start.end(), a.begin() + static_cast<long>(nv));
  }
  const StepSpec spec = full_step(false);
  MassDrift rep;
  rep.initial_mass = total_mass(model, a);
  double previous = rep.initial_mass;
  for (std::size_t p = 0; p < periods; ++p) {
    for (std::size_t n = 0; n < nt; ++n) {
      stepper.step(n, a, b, spec);
      std::swap(a, b);
    }
    const double m = total_mass(model, a);
    rep.period_mass.push_back(m);
    rep.drift.push_back(std::abs(m - previous) / rep.initial_mass);
    rep.max_drift = std::max(rep.max_drift, rep.drift.back());
    previous = m;
  }
  return rep;
}

void write_stability_csv(const std::string& path, const StabilityRun& run) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,l2,weighted_sup,mass,min_F\n" << std::setprecision(12);
  for (const auto& r : run.history)
    os << r.t << ',' << r.l2 << ',' << r.weighted_sup << ',' << r.mass << ',' << r.min_F << '\n';
}

}  // namespace kinetics
