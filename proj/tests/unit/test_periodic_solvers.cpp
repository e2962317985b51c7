#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "kinetics/periodic_solvers.hpp"

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
KineticModel small_model(double delta, std::size_t nx = 8, std::size_t nt = 16) {
  return KineticModel(PhaseGrid{small_velocity(), SpaceTimeGrid(nx, nt, 1.0)}, WallMotion(delta, 1.0),
                      small_tables());
}
double sup(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("zero data gives zero solutions") {
  const auto model = small_model(0.02);
  const TransportStepper stepper(model);
  const SolverSettings s;
  CHECK(sup(transport_solve(stepper, nullptr, nullptr, 1.0, s).f.values()) == 0.0);
  BootstrapReport br;
  const auto boot = lambda_bootstrap(stepper, nullptr, nullptr, s, &br);
  CHECK(sup(boot.f.values()) == 0.0);
  BoundaryIterationReport bi;
  const auto b = boundary_fixed_point(stepper, nullptr, nullptr, 0.0, 50, s, &bi);
  CHECK(sup(b.f.values()) == 0.0);
  CHECK(bi.iterations <= 1);
  KIterationReport ki;
  CHECK(sup(k_fixed_point(stepper, nullptr, nullptr, 10.0, s, &ki).f.values()) == 0.0);
}

TEST_CASE("stationary wall has the trivial periodic state") {
  const auto model = small_model(0.0);
  const auto res = nonlinear_periodic_solve(model, SolverSettings{});
  CHECK(res.report.converged);
  CHECK(sup(res.solution.f.values()) <= 1e-8);
  const auto F = to_F(model.velocity(), res.solution.f);
  for (std::size_t iv : {0u, 100u, 300u}) CHECK(F.at(3, 2, iv) == doctest::Approx(model.velocity().mu()[iv]));
}

TEST_CASE("force source has zero mass") {
  const auto model = small_model(0.05);
  const std::size_t n = model.space_time().nx() * model.velocity().size();
  for (std::size_t it = 0; it < model.space_time().nt(); ++it) {
    std::vector<double> out(n, 0.0);
    model.add_force_source(it, out);
    double mass = 0.0;
    const auto sqrt_mu = model.velocity().sqrt_mu();
    for (std::size_t k = 0; k < n; ++k) mass += out[k] * sqrt_mu[k % model.velocity().size()];
    mass *= model.velocity().cell_volume() * model.space_time().dx();
    CHECK(std::abs(mass) < 1e-12);
  }
}

TEST_CASE("free transport from a constant inflow") {
  // G = 0, lambda = 0, no source: f = exp(-nu x / v1) r(v) on v1 > 0 for inflow r at x = 0.
  const auto model = small_model(0.0, 32, 16);
  const TransportStepper stepper(model);
  const auto& vg = model.velocity();
  auto inflow = model.grid().make_trace(TraceSide::incoming);
  for (std::size_t it = 0; it < inflow.nt(); ++it)
    for (std::size_t iv = 0; iv < vg.size(); ++iv) {
      if (on_side(vg.node(iv)[0], 0, TraceSide::incoming)) inflow.at(it, 0, iv) = vg.sqrt_mu()[iv];
    }
  SweepReport rep;
  const auto sol = inflow_periodic_solve(stepper, nullptr, inflow, 0.0, SolverSettings{}, &rep);
  CHECK(rep.converged);
  double worst = 0.0;
  for (std::size_t ix : {3u, 15u, 28u})
    for (std::size_t iv = 0; iv < vg.size(); iv += 37) {
      const auto& v = vg.node(iv);
      if (v[0] <= 0.0) continue;
      const double x = model.space_time().x(ix);
      const double expected = std::exp(-collision_frequency(v) * x / v[0]) * vg.sqrt_mu()[iv];
      worst = std::max(worst, std::abs(sol.f.at(5, ix, iv) - expected) / vg.sqrt_mu()[iv]);
    }
  CHECK(worst < 2e-2);
}

TEST_CASE("contraction of the K iteration at the penalty") {
  const auto model = small_model(0.02);
  const TransportStepper stepper(model);
  const auto g = model.nonlinear_volume_source(PeriodicSolution::zeros(model.grid()).f);
  const auto r = model.nonlinear_wall_source(model.grid().make_trace(TraceSide::outgoing));
  const double lambda0 = measured_lambda0(model.collision());
  KIterationReport at, twice;
  k_fixed_point(stepper, &g, &r, lambda0, SolverSettings{}, &at);
  k_fixed_point(stepper, &g, &r, 2.0 * lambda0, SolverSettings{}, &twice);
  CHECK(at.converged);
  CHECK(at.max_energy_ratio() <= 0.55);
  CHECK(twice.max_energy_ratio() < at.max_energy_ratio());
}

TEST_CASE("linear solves") {
  const auto model = small_model(0.02);
  const TransportStepper stepper(model);
  const auto g = model.nonlinear_volume_source(PeriodicSolution::zeros(model.grid()).f);
  const auto r = model.nonlinear_wall_source(model.grid().make_trace(TraceSide::outgoing));
  SolverSettings s;
  s.tol_fix = 1e-10;

  LinearSolveInfo info;
  const auto zero_mass = periodic_linear_solve(stepper, &g, &r, 0.0, true, s, &info);
  CHECK(info.converged);
  CHECK(sup(slice_mass(model.grid(), zero_mass.f)) <= 1e-8);

  BootstrapReport br;
  const auto boot = lambda_bootstrap(stepper, &g, &r, s, &br);
  CHECK(br.resolvent_bound > 0.0);
  CHECK_FALSE(br.rungs.empty());
  CHECK(br.rungs.back().lambda == 0.0);
  CHECK(br.max_slice_mass <= 1e-8);
  auto diff = boot.f;
  diff.axpy(-1.0, zero_mass.f);
  CHECK(norm_l2(model.grid(), diff) <= 1e-6 * norm_l2(model.grid(), zero_mass.f));

  // Linearity in the data at a fixed penalty.
  auto g2 = g;
  g2.scale(2.0);
  auto r2 = r;
  for (auto& x : r2.values()) x *= 2.0;
  const double lambda = measured_lambda0(model.collision());
  const auto a = periodic_linear_solve(stepper, &g, &r, lambda, false, s);
  auto b = periodic_linear_solve(stepper, &g2, &r2, lambda, false, s);
  b.f.axpy(-2.0, a.f);
  CHECK(norm_l2(model.grid(), b.f) <= 1e-8 * norm_l2(model.grid(), a.f));
}

TEST_CASE("nonlinear periodic state for a small oscillation") {
  const auto model = small_model(0.01);
  const auto res = nonlinear_periodic_solve(model, SolverSettings{});
  CHECK(res.report.converged);
  CHECK(res.report.stayed_in_ball);
  CHECK(res.report.c_hat > 0.0);
  CHECK(res.report.max_slice_mass <= 1e-8);
  CHECK(res.report.source_mass <= 1e-12);
  const auto& outer = res.report.outer;
  REQUIRE(outer.size() >= 2);
  CHECK(outer.back().change < outer.front().change);
}

TEST_CASE("periodic residual and iteration lemma") {
  const auto model = small_model(0.0);
  auto a = model.grid().make_field(0.5);
  const auto same = periodic_residual(model.grid(), a, a);
  CHECK(same.l2 == 0.0);
  CHECK(same.sup == 0.0);

  std::vector<double> seq;
  for (int i = 0; i < 30; ++i) seq.push_back(std::pow(0.5, i));
  const auto ok = iteration_lemma_check(seq, 2, 0.0);
  CHECK(ok.hypothesis);
  CHECK(ok.conclusion);
  std::vector<double> flat(30, 1.0);
  CHECK_FALSE(iteration_lemma_check(flat, 2, 0.0).hypothesis);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(KineticModel(PhaseGrid{small_velocity(), SpaceTimeGrid(8, 10, 1.0)}, WallMotion(0.01, 1.0),
                               small_tables(), WeightFunction(), 4, 4),
                  ConfigError);
}
