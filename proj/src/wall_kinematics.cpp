#include "kinetics/wall_kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kinetics {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double maxwell_norm = 0.06349363593424097;  // (2 pi)^{-3/2}

// Gauss-Legendre, 8 points on [-1, 1].
constexpr std::array<double, 4> gl_x = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> gl_w = {0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl_x.size(); ++i)
    sum += gl_w[i] * (f(mid - half * gl_x[i]) + f(mid + half * gl_x[i]));
  return half * sum;
}

}  // namespace

WallShape WallShape::sine() { return WallShape(Kind::sine); }
WallShape WallShape::cosine() { return WallShape(Kind::cosine); }

WallShape WallShape::from_table(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 3) throw ConfigError("wall.shape table needs at least 3 samples");
  WallShape shape(Kind::table);
  for (double s : samples) shape.a0_ += s;
  shape.a0_ /= static_cast<double>(n);
  const std::size_t modes = n / 2;
  shape.cos_coeff_.assign(modes, 0.0);
  shape.sin_coeff_.assign(modes, 0.0);
  for (std::size_t k = 1; k <= modes; ++k) {
    const bool nyquist = (2 * k == n);
    const double scale = (nyquist ? 1.0 : 2.0) / static_cast<double>(n);
    double c = 0.0, s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = two_pi * static_cast<double>(k * j) / static_cast<double>(n);
      c += samples[j] * std::cos(arg);
      s += samples[j] * std::sin(arg);
    }
    shape.cos_coeff_[k - 1] = scale * c;
    shape.sin_coeff_[k - 1] = nyquist ? 0.0 : scale * s;
  }
  return shape;
}

WallShape WallShape::from_name(const std::string& name) {
  if (name == "sine") return sine();
  if (name == "cosine") return cosine();
  throw ConfigError("wall.shape must be 'sine' or 'cosine' (tables are loaded separately), got '" +
                    name + "'");
}

std::string WallShape::name() const {
  switch (kind_) {
    case Kind::sine: return "sine";
    case Kind::cosine: return "cosine";
    case Kind::table: return "custom-table";
  }
  return "unknown";
}

double WallShape::evaluate_series(double phase, int derivative) const {
  double sum = derivative == 0 ? a0_ : 0.0;
  for (std::size_t k = 1; k <= cos_coeff_.size(); ++k) {
    const double w = two_pi * static_cast<double>(k);
    const double c = std::cos(w * phase), s = std::sin(w * phase);
    const double a = cos_coeff_[k - 1], b = sin_coeff_[k - 1];
    switch (derivative) {
      case 0: sum += a * c + b * s; break;
      case 1: sum += w * (-a * s + b * c); break;
      default: sum += -w * w * (a * c + b * s); break;
    }
  }
  return sum;
}

double WallShape::value(double phase) const {
  switch (kind_) {
    case Kind::sine: return std::sin(two_pi * phase);
    case Kind::cosine: return std::cos(two_pi * phase);
    case Kind::table: return evaluate_series(phase, 0);
  }
  return 0.0;
}

double WallShape::slope(double phase) const {
  switch (kind_) {
    case Kind::sine: return two_pi * std::cos(two_pi * phase);
    case Kind::cosine: return -two_pi * std::sin(two_pi * phase);
    case Kind::table: return evaluate_series(phase, 1);
  }
  return 0.0;
}

double WallShape::curvature(double phase) const {
  switch (kind_) {
    case Kind::sine: return -two_pi * two_pi * std::sin(two_pi * phase);
    case Kind::cosine: return -two_pi * two_pi * std::cos(two_pi * phase);
    case Kind::table: return evaluate_series(phase, 2);
  }
  return 0.0;
}

WallMotion::WallMotion(double delta, double period, WallShape shape, double delta_max)
    : delta_(delta), period_(period), shape_(std::move(shape)) {
  if (!(period > 0.0) || !std::isfinite(period))
    throw ConfigError("wall.period must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("wall.delta must be >= 0");
  if (delta > delta_max)
    throw ConfigError("wall.delta exceeds the construction guard delta_max");
  double lowest = 1.0;
  for (int i = 0; i < 4096; ++i) lowest = std::min(lowest, state(period * i / 4096.0).position);
  if (lowest <= 0.0) throw ConfigError("wall profile reaches X_w <= 0");
}

double WallMotion::reduced_phase(double t) const {
  double p = t / period_;
  p -= std::floor(p);
  p = std::ldexp(std::nearbyint(std::ldexp(p, 36)), -36);
  return p >= 1.0 ? p - 1.0 : p;
}

WallState WallMotion::state(double t) const {
  const double p = reduced_phase(t);
  return {1.0 + delta_ * shape_.value(p), delta_ * shape_.slope(p) / period_,
          delta_ * shape_.curvature(p) / (period_ * period_)};
}

namespace {
template <class F>
double sample_max(std::size_t samples, F&& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < samples; ++i)
    m = std::max(m, f(static_cast<double>(i) / static_cast<double>(samples)));
  return m;
}
}  // namespace

double WallMotion::max_abs_velocity(std::size_t samples) const {
  return sample_max(samples, [&](double p) { return std::abs(state(p * period_).velocity); });
}

double WallMotion::max_abs_acceleration(std::size_t samples) const {
  return sample_max(samples,
                    [&](double p) { return std::abs(state(p * period_).acceleration); });
}

double WallMotion::max_position(std::size_t samples) const {
  return sample_max(samples, [&](double p) { return state(p * period_).position; });
}

double WallMotion::c2_norm(std::size_t samples) const {
  return sample_max(samples, [&](double p) { return std::abs(state(p * period_).position - 1.0); }) +
         max_abs_velocity(samples) + max_abs_acceleration(samples);
}

FrameClock::FrameClock(const WallMotion& wall, std::size_t panels)
    : wall_(wall), period_(wall.period()) {
  if (panels == 0) throw ConfigError("frame clock needs at least one panel");
  panel_t_.resize(panels + 1);
  panel_tbar_.resize(panels + 1);
  panel_tbar_[0] = 0.0;
  for (std::size_t k = 0; k <= panels; ++k)
    panel_t_[k] = period_ * static_cast<double>(k) / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k)
    panel_tbar_[k + 1] = panel_tbar_[k] + partial(k, panel_t_[k + 1]);
  tbar_period_ = panel_tbar_.back();
}

double FrameClock::partial(std::size_t panel, double t_local) const {
  const double a = panel_t_[panel];
  return gauss_legendre(
      [&](double t) {
        const double x = wall_.state(t).position;
        return 1.0 / (x * x);
      },
      a, t_local);
}

double FrameClock::forward(double t) const {
  const double n = std::floor(t / period_);
  double r = t - n * period_;
  if (r >= period_) r = 0.0;  // floor rounding at the period seam
  const std::size_t panels = this->panels();
  auto k = static_cast<std::size_t>(r / period_ * static_cast<double>(panels));
  k = std::min(k, panels - 1);
  return n * tbar_period_ + panel_tbar_[k] + partial(k, r);
}

double FrameClock::inverse(double tbar) const {
  const double n = std::floor(tbar / tbar_period_);
  double r = tbar - n * tbar_period_;
  if (r >= tbar_period_) r = 0.0;
  auto it = std::upper_bound(panel_tbar_.begin(), panel_tbar_.end(), r);
  std::size_t k = static_cast<std::size_t>(std::distance(panel_tbar_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, panels()) - 1;
  double lo = panel_t_[k], hi = panel_t_[k + 1];
  const double span = panel_tbar_[k + 1] - panel_tbar_[k];
  double t = lo + (hi - lo) * (r - panel_tbar_[k]) / span;
  for (int it_count = 0; it_count < 60; ++it_count) {
    const double residual = panel_tbar_[k] + partial(k, t) - r;
    if (residual > 0.0) hi = t; else lo = t;
    const double x = wall_.state(t).position;
    double next = t - residual * x * x;
    if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * period_) {
      t = next;
      break;
    }
    t = next;
  }
  return n * period_ + t;
}

double force_slope(const FrameClock& clock, double tbar) {
  const WallState s = clock.wall_state_at(tbar);
  return -s.position * s.position * s.position * s.acceleration;
}

double force(const FrameClock& clock, double tbar, double xbar) {
  return force_slope(clock, tbar) * xbar;
}

double maxwellian(double speed_squared) { return maxwell_norm * std::exp(-0.5 * speed_squared); }

double maxwellian(const Velocity& v) {
  return maxwellian(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double wall_maxwellian_moving(const WallMotion& wall, double t, const Velocity& v) {
  const double u = v[0] - wall.state(t).velocity;
  return maxwellian(u * u + v[1] * v[1] + v[2] * v[2]);
}

double wall_maxwellian_fixed_at(double wall_position, const Velocity& vbar) {
  const double u = vbar[0] / wall_position;
  return maxwellian(u * u + vbar[1] * vbar[1] + vbar[2] * vbar[2]) /
         (wall_position * wall_position);
}

double wall_maxwellian_fixed(const FrameClock& clock, double tbar, const Velocity& vbar) {
  return wall_maxwellian_fixed_at(clock.wall_state_at(tbar).position, vbar);
}

double local_maxwellian(const WallMotion& wall, double t, double x, const Velocity& v) {
  const WallState s = wall.state(t);
  const double u = v[0] * s.position - x * s.velocity;
  return maxwellian(u * u + v[1] * v[1] + v[2] * v[2]);
}

}  // namespace kinetics
