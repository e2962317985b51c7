#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "kinetics/collision_ops.hpp"

using namespace kinetics;
using std::numbers::pi;

namespace {

const VelocityGrid& desk_grid() {
  static const VelocityGrid grid(5.4, 12);
  return grid;
}
const CollisionOperator& desk_operator() {
  static const CollisionOperator op(desk_grid());
  return op;
}
const CollisionForm& desk_form() {
  static const CollisionForm form(desk_grid(), 12);
  return form;
}

std::vector<double> chi(const VelocityGrid& vg, std::size_t i) {
  std::vector<double> out(vg.size());
  for (std::size_t j = 0; j < vg.size(); ++j) out[j] = vg.chi(i, j);
  return out;
}

}  // namespace

TEST_CASE("collision frequency") {
  // 2 pi E|v - Z|, Z standard normal, by mpmath quadrature at 30 digits.
  CHECK(collision_frequency(0.0) == doctest::Approx(10.02651309852400201).epsilon(1e-12));
  CHECK(collision_frequency(1.0) == doctest::Approx(11.61962297485582549).epsilon(1e-12));
  CHECK(collision_frequency(3.0) == doctest::Approx(20.943098877059501366).epsilon(1e-12));
  CHECK(collision_frequency(0.0) == doctest::Approx(4.0 * std::sqrt(2.0 * pi)));
  CHECK(std::abs(collision_frequency(8.0) / (2.0 * pi * 8.0) - 1.0) < 0.02);
  const Velocity v{0.3, -1.1, 0.7}, mv{-0.3, 1.1, -0.7};
  CHECK(collision_frequency(v) == collision_frequency(mv));
}

TEST_CASE("kernel values and symmetry") {
  const Velocity zero{0, 0, 0};
  for (double r : {0.5, 1.3, 2.7}) {
    const Velocity u{0.0, r, 0.0};
    CHECK(kernel_loss(zero, u) == doctest::Approx(r * std::exp(-r * r / 4) / std::sqrt(2 * pi)));
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const Velocity a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const double kab = grad_kernel(a, b), kba = grad_kernel(b, a);
    CHECK(std::abs(kab - kba) <= 1e-12 * std::max(1.0, std::abs(kab)));
  }
  CHECK_THROWS(grad_kernel(zero, zero));
  const auto k1 = verify_k1_bound(2000, 4);
  CHECK(k1.holds);
  CHECK(k1.fitted_constant <= k1.analytic_constant);
}

TEST_CASE("linearized operator") {
  const auto& op = desk_operator();
  const auto& vg = desk_grid();
  std::vector<double> zero(vg.size(), 0.0), out(vg.size());
  op.apply_K(zero, out);
  CHECK(*std::max_element(out.begin(), out.end()) == 0.0);

  const WeightFunction wf;
  CHECK(op.null_defect(wf) < 1e-10);
  CHECK(op.raw_null_defect(wf) > op.null_defect(wf));
  CHECK((op.k_matrix() - op.k_matrix().transpose()).cwiseAbs().maxCoeff() < 1e-12);

  for (std::size_t i = 0; i < 5; ++i) {
    const auto c = chi(vg, i);
    std::vector<double> pc(vg.size()), lc(vg.size());
    op.project_P(c, pc);
    double err = 0.0;
    for (std::size_t j = 0; j < vg.size(); ++j) err = std::max(err, std::abs(pc[j] - c[j]));
    CHECK(err < 1e-10);
  }
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<double> f(vg.size()), q(vg.size()), pq(vg.size()), lf(vg.size());
  for (auto& x : f) x = n(rng);
  op.complement_P(f, q);
  op.project_P(q, pq);
  double leak = 0.0;
  for (double x : pq) leak = std::max(leak, std::abs(x));
  CHECK(leak < 1e-12);
  op.apply_L(f, lf);
  double quadratic = 0.0;
  for (std::size_t j = 0; j < vg.size(); ++j) quadratic += lf[j] * f[j];
  CHECK(quadratic >= 0.0);
}

TEST_CASE("coercivity floor") {
  const VelocityGrid vg(4.8, 8);
  const CollisionOperator op(vg);
  const auto rep = coercivity_floor(op, 200, 3);
  CHECK(rep.samples == 200);
  CHECK(rep.eigen_floor > 0.0);
  CHECK(rep.random_min_quotient >= rep.eigen_floor - 1e-12);
}

TEST_CASE("k2 bound ratio decays on the outer shell") {
  const auto rep = verify_k2_bound(desk_grid(), 0.5, 3.5);
  CHECK(std::isfinite(rep.max_ratio));
  CHECK(rep.max_ratio > 0.0);
  CHECK(rep.outer_shell_ratio <= rep.max_ratio);
}

TEST_CASE("Gamma basic identities") {
  const auto& vg = desk_grid();
  const auto& form = desk_form();
  const WeightFunction wf;
  const auto g = smooth_random_velocity_field(vg, wf, 8);
  const std::vector<double> zero(vg.size(), 0.0);
  const auto g0 = form.evaluate(zero, g);
  CHECK(*std::max_element(g0.begin(), g0.end()) == 0.0);

  const auto c0 = chi(vg, 0);
  const auto eq = form.evaluate(c0, c0);
  // Gain and loss cancel to the accuracy of the deposit, measured against the loss scale.
  double peak = 0.0, loss = 0.0;
  for (std::size_t j = 0; j < vg.size(); ++j) {
    peak = std::max(peak, std::abs(eq[j]));
    loss = std::max(loss, collision_frequency(vg.node(j)) * vg.sqrt_mu()[j]);
  }
  CHECK(peak < 0.03 * loss);

  const auto f = smooth_random_velocity_field(vg, wf, 9);
  CHECK(gamma_conservation(form, f, g).max() < 1e-5);
}

TEST_CASE("Gamma against direct quadrature") {
  // Rows {v1, v2, v3, gain, loss}: f = sqrt(mu) 0.5 (two Gaussian bumps), direct 5D quadrature.
  static constexpr double rows[][5] = {
#include "../oracles/gamma_values.txt"
  };
  const auto& vg = desk_grid();
  const double a = 0.5, s = 1.0;
  const Velocity c1{0.8, -0.3, 0.2}, c2{-0.6, 0.4, -0.5};
  std::vector<double> f(vg.size());
  for (std::size_t j = 0; j < vg.size(); ++j) {
    const auto& v = vg.node(j);
    auto d2 = [&](const Velocity& c) {
      return (v[0] - c[0]) * (v[0] - c[0]) + (v[1] - c[1]) * (v[1] - c[1]) + (v[2] - c[2]) * (v[2] - c[2]);
    };
    f[j] = vg.sqrt_mu()[j] * a * (std::exp(-d2(c1) / (2 * s * s)) + std::exp(-d2(c2) / (2 * s * s)));
  }
  const auto gamma = desk_form().evaluate(f, f);
  double scale = 0.0, err = 0.0;
  for (const auto& row : rows) {
    auto idx = [&](double x) { return static_cast<std::size_t>(std::lround((x + 5.4) / 0.9 - 0.5)); };
    const std::size_t j = vg.index(idx(row[0]), idx(row[1]), idx(row[2]));
    REQUIRE(std::abs(vg.node(j)[0] - row[0]) < 1e-12);
    scale = std::max(scale, std::abs(row[3]));
    err = std::max(err, std::abs(gamma[j] - (row[3] - row[4])));
  }
  CHECK(err / scale < 0.05);
}

TEST_CASE("Gamma bound constant") {
  const VelocityGrid vg(4.8, 8);
  const CollisionForm form(vg, 12);
  const auto rep = fit_gamma_bound(form, WeightFunction(), 10, 1);
  CHECK(rep.pairs == 10);
  CHECK(rep.fitted_constant > 0.0);
  CHECK(std::isfinite(rep.fitted_constant));
}

TEST_CASE("modified multiplier") {
  const VelocityGrid& vg = desk_grid();
  const auto still = ForceField::zero();
  const ModifiedMultiplier flat(vg, still, WeightFunction());
  const Velocity v{0.4, 0.0, -1.0};
  CHECK(flat(0.2, 0.5, v) == doctest::Approx(collision_frequency(v)));
  const double floor = 0.9 * collision_frequency(0.0);
  const auto wall_force = [](double delta) { return ForceField::from_clock(FrameClock(WallMotion(delta, 1.0))); };
  CHECK(ModifiedMultiplier(vg, wall_force(0.1), WeightFunction(), false).minimum() >= floor);
  CHECK(ModifiedMultiplier(vg, wall_force(0.01), WeightFunction(), true).minimum() >= floor);
}
