#include "kinetics/frame_transform.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kinetics {

PhasePoint to_fixed(const FrameClock& clock, const PhasePoint& moving) {
  const WallState w = clock.wall().state(moving.t);
  if (moving.x < 0.0 || moving.x > w.position)
    throw DomainError("to_fixed: x outside [0, X_w(t)]");
  PhasePoint out = moving;
  out.t = clock.forward(moving.t);
  out.x = moving.x / w.position;
  out.v[0] = moving.v[0] * w.position - moving.x * w.velocity;
  return out;
}

PhasePoint to_moving(const FrameClock& clock, const PhasePoint& fixed) {
  if (fixed.x < 0.0 || fixed.x > 1.0) throw DomainError("to_moving: xbar outside [0, 1]");
  const double t = clock.inverse(fixed.t);
  const WallState w = clock.wall().state(t);
  PhasePoint out = fixed;
  out.t = t;
  out.x = fixed.x * w.position;
  out.v[0] = (fixed.v[0] + out.x * w.velocity) / w.position;
  return out;
}

double jacobian_determinant(const FrameClock& clock, const PhasePoint& moving, double eps) {
  auto image = [&](double x, double v1) {
    PhasePoint p = moving;
    p.x = x;
    p.v[0] = v1;
    const WallState w = clock.wall().state(p.t);
    return std::array<double, 2>{p.x / w.position, p.v[0] * w.position - p.x * w.velocity};
  };
  const auto xp = image(moving.x + eps, moving.v[0]);
  const auto xm = image(moving.x - eps, moving.v[0]);
  const auto vp = image(moving.x, moving.v[0] + eps);
  const auto vm = image(moving.x, moving.v[0] - eps);
  const double a = (xp[0] - xm[0]) / (2 * eps), b = (vp[0] - vm[0]) / (2 * eps);
  const double c = (xp[1] - xm[1]) / (2 * eps), d = (vp[1] - vm[1]) / (2 * eps);
  return a * d - b * c;
}

EquivalenceStats equivalence_residual(const FrameClock& clock, const FixedFieldSampler& field,
                                      std::size_t n_samples, std::uint64_t seed,
                                      double time_shift) {
  const ForceField g = ForceField::from_clock(clock);
  const double h = default_ode_step(g);
  const double tbar_period = clock.transformed_period();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EquivalenceStats stats;
  double total = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    PhasePoint fixed{tbar_period * unit(rng) + time_shift, 0.05 + 0.9 * unit(rng),
                     {4.0 * unit(rng) - 2.0, unit(rng) - 0.5, unit(rng) - 0.5}};
    // Stay strictly inside: go back a fraction of the exit time.
    const ExitData exit = backward_exit(fixed, g, 2.0 * tbar_period, h);
    const double sbar = fixed.t - 0.8 * exit.t_b;
    const Trajectory traj = integrate(fixed, sbar, g, h);
    const PhasePoint fixed_end = traj.end();

    const PhasePoint moving = to_moving(clock, fixed);
    const double s = clock.inverse(sbar);
    PhasePoint moving_end = moving;
    moving_end.t = s;
    moving_end.x = moving.x - (moving.t - s) * moving.v[0];
    const PhasePoint mapped = to_fixed(clock, moving_end);

    const double dev = std::abs(mapped.x - fixed_end.x) + std::abs(mapped.v[0] - fixed_end.v[0]);
    stats.max_deviation = std::max(stats.max_deviation, dev);
    total += dev;
    if (field) {
      // Free transport keeps F constant along characteristics in both frames.
      stats.max_field_deviation =
          std::max(stats.max_field_deviation, std::abs(field(mapped) - field(fixed_end)));
    }
  }
  stats.samples = n_samples;
  stats.mean_deviation = n_samples ? total / static_cast<double>(n_samples) : 0.0;
  return stats;
}

}  // namespace kinetics
