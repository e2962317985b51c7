#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "kinetics/frame_transform.hpp"

using namespace kinetics;

TEST_CASE("identity map for a stationary wall") {
  const FrameClock clock(WallMotion(0.0, 1.0));
  const PhasePoint p{0.4, 0.3, {1.0, -2.0, 0.5}};
  const auto q = to_fixed(clock, p);
  CHECK(q.t == doctest::Approx(p.t));
  CHECK(q.x == p.x);
  CHECK(q.v[0] == p.v[0]);
}

TEST_CASE("moving wall maps to x = 1") {
  const FrameClock clock(WallMotion(0.1, 1.0));
  for (double t : {0.0, 0.25, 0.61}) {
    const PhasePoint p{t, clock.wall().position(t), {0.2, 0.0, 0.0}};
    CHECK(to_fixed(clock, p).x == 1.0);
  }
}

TEST_CASE("substitution example") {
  const FrameClock clock(WallMotion(0.1, 1.0));
  const auto q = to_fixed(clock, {0.0, 0.55, {1.0, 0.0, 0.0}});
  CHECK(q.x == doctest::Approx(0.55));
  CHECK(q.v[0] == doctest::Approx(1.0 - 0.55 * 0.2 * std::numbers::pi));
}

TEST_CASE("round trip, jacobian and untouched transverse velocity") {
  const FrameClock clock(WallMotion(0.1, 1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double t = 2.0 * u(rng);
    const PhasePoint p{t, clock.wall().position(t) * u(rng), {4.0 * u(rng) - 2.0, u(rng), -u(rng)}};
    const auto q = to_fixed(clock, p);
    const auto back = to_moving(clock, q);
    CHECK(std::abs(back.t - p.t) <= 1e-9);
    CHECK(std::abs(back.x - p.x) <= 1e-9);
    CHECK(std::abs(back.v[0] - p.v[0]) <= 1e-9);
    CHECK(q.v[1] == p.v[1]);
    CHECK(q.v[2] == p.v[2]);
    if (k < 50) CHECK(std::abs(jacobian_determinant(clock, p) - 1.0) <= 1e-6);
  }
  CHECK_THROWS_AS(to_fixed(clock, {0.25, 1.2, {0, 0, 0}}), DomainError);
}

TEST_CASE("frame equivalence of characteristics") {
  const FrameClock still(WallMotion(0.0, 1.0));
  CHECK(equivalence_residual(still, nullptr, 50, 1).max_deviation < 1e-12);

  const FrameClock clock(WallMotion(0.05, 1.0));
  const auto field = [](const PhasePoint& p) { return std::exp(-p.v[0] * p.v[0]) * (1.0 + p.x * p.v[1]); };
  const auto a = equivalence_residual(clock, field, 100, 5);
  CHECK(a.samples == 100);
  CHECK(a.max_deviation < 1e-8);
  CHECK(a.max_field_deviation < 1e-8);
  const auto b = equivalence_residual(clock, field, 100, 5, clock.period());
  CHECK(std::abs(a.max_deviation - b.max_deviation) < 1e-9);
  CHECK(std::abs(a.mean_deviation - b.mean_deviation) < 1e-9);
}
