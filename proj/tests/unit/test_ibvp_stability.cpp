#include <cmath>
#include <vector>

#include "doctest.h"

#include "kinetics/ibvp_stability.hpp"

using namespace kinetics;

namespace {

const VelocityGrid& small_velocity() {
  static const VelocityGrid vg(4.8, 8);
  return vg;
}
const CollisionTables& small_tables() {
  static const CollisionTables t = CollisionTables::build(small_velocity());
  return t;
}
KineticModel small_model(double delta) {
  return KineticModel(PhaseGrid{small_velocity(), SpaceTimeGrid(8, 16, 1.0)}, WallMotion(delta, 1.0),
                      small_tables());
}

}  // namespace

TEST_CASE("decay fit on synthetic data") {
  std::vector<double> t, v;
  for (int n = 1; n <= 100; ++n) {
    t.push_back(0.1 * n);
    v.push_back(3.0 * std::exp(-0.7 * t.back()) * (1.0 + 0.05 * std::sin(2.0 * M_PI * t.back())));
  }
  const auto fit = decay_rate_fit(t, v, 1.0, 0.5, 3.0, 0.0);
  CHECK(fit.accepted);
  CHECK(fit.rate == doctest::Approx(0.7).epsilon(0.02));
  CHECK(fit.r_squared > 0.98);
  CHECK(fit.monotone_tail);

  std::vector<double> grow(v.rbegin(), v.rend());
  CHECK_FALSE(decay_rate_fit(t, grow, 1.0, 0.5, 3.0, 0.0).accepted);
  const std::vector<double> short_t(t.begin(), t.begin() + 30), short_v(v.begin(), v.begin() + 30);
  CHECK_FALSE(decay_rate_fit(short_t, short_v, 1.0).accepted);
}

TEST_CASE("positivity check") {
  const auto& vg = small_velocity();
  const auto model = small_model(0.0);
  auto F = model.grid().make_field();
  for (std::size_t it = 0; it < F.nt(); ++it)
    for (std::size_t ix = 0; ix < F.nx(); ++ix)
      for (std::size_t iv = 0; iv < F.nv(); ++iv) F.at(it, ix, iv) = vg.mu()[iv];
  CHECK(positivity_check(vg, F).pass);
  F.at(2, 3, 10) = -1e-6;
  const auto rep = positivity_check(vg, F);
  CHECK_FALSE(rep.pass);
  CHECK(rep.it == 2);
  CHECK(rep.ix == 3);
  CHECK(rep.iv == 10);
}

TEST_CASE("marching the periodic state") {
  const auto model = small_model(0.02);
  SolverSettings s;
  s.tol_fix = s.tol_outer = 1e-11;
  const auto steady = nonlinear_periodic_solve(model, s);
  REQUIRE(steady.report.converged);
  const std::vector<double> zero(model.space_time().nx() * model.velocity().size(), 0.0);
  const auto still = ibvp_march(model, steady.solution, zero, 2);
  double drift = 0.0;
  for (const auto& r : still.history) drift = std::max(drift, r.weighted_sup);
  CHECK(drift <= 10.0 * s.tol_fix);

  const auto f0 = default_initial_perturbation(model, 1e-3, 4);
  double mass0 = 0.0;
  for (std::size_t k = 0; k < f0.size(); ++k) mass0 += f0[k] * model.velocity().sqrt_mu()[k % model.velocity().size()];
  CHECK(std::abs(mass0) * model.velocity().cell_volume() * model.space_time().dx() < 1e-14);
  const auto run = ibvp_march(model, steady.solution, f0, 6);
  CHECK(run.completed == 6);
  CHECK_FALSE(run.blew_up);
  CHECK(run.initial_weighted_sup == doctest::Approx(1e-3));
  for (const auto& r : run.history) CHECK(std::abs(r.mass) <= 1e-6);
  CHECK(run.period_distance.back() < run.period_distance.front());
  CHECK(decay_rate_fit(run).rate > 0.0);
}

TEST_CASE("equilibrium keeps its mass") {
  const auto md = mass_conservation_check(small_model(0.0), 2);
  CHECK(md.initial_mass == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(md.max_drift < 1e-12);
}
