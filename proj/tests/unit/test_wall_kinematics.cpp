#include <cmath>
#include <numbers>

#include "doctest.h"

#include "kinetics/wall_kinematics.hpp"

using namespace kinetics;
using std::numbers::pi;

TEST_CASE("stationary wall") {
  const WallMotion wall(0.0, 1.0);
  for (double t : {0.0, 0.3, 7.25}) {
    const auto s = wall.state(t);
    CHECK(s.position == 1.0);
    CHECK(s.velocity == 0.0);
    CHECK(s.acceleration == 0.0);
  }
}

TEST_CASE("sine wall derivatives") {
  const WallMotion wall(0.1, 1.0);
  const auto s0 = wall.state(0.0);
  CHECK(s0.position == doctest::Approx(1.0));
  CHECK(s0.velocity == doctest::Approx(0.2 * pi));
  CHECK(std::abs(s0.acceleration) < 1e-12);
  const auto s1 = wall.state(0.25);
  CHECK(s1.position == doctest::Approx(1.1));
  CHECK(std::abs(s1.velocity) < 1e-12);
  CHECK(s1.acceleration == doctest::Approx(-0.4 * pi * pi));
}

TEST_CASE("wall state is exactly periodic") {
  const WallMotion wall(0.1, 2.0);
  for (double t : {0.1, 0.77, 1.3}) {
    const auto a = wall.state(t), b = wall.state(t + 2.0);
    CHECK(a.position == b.position);
    CHECK(a.velocity == b.velocity);
  }
}

TEST_CASE("invalid wall parameters") {
  CHECK_THROWS_AS(WallMotion(-0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(WallMotion(0.6, 1.0), ConfigError);
  CHECK_THROWS_AS(WallMotion(0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(WallShape::from_name("square"), ConfigError);
}

TEST_CASE("table shape reproduces a sampled sine") {
  std::vector<double> samples;
  for (int k = 0; k < 16; ++k) samples.push_back(std::sin(2.0 * pi * k / 16.0));
  const auto table = WallShape::from_table(samples);
  const auto sine = WallShape::sine();
  for (double p : {0.03, 0.41, 0.9}) {
    CHECK(table.value(p) == doctest::Approx(sine.value(p)).epsilon(1e-12));
    CHECK(table.slope(p) == doctest::Approx(sine.slope(p)).epsilon(1e-10));
  }
}

TEST_CASE("frame clock") {
  const FrameClock still(WallMotion(0.0, 1.0));
  for (double t : {0.0, 0.4, 2.5}) CHECK(still.forward(t) == doctest::Approx(t).epsilon(1e-14));

  // Adaptive quadrature of (1 + 0.1 sin t)^-2 over [0, 2 pi], 30 digits.
  const FrameClock clock(WallMotion(0.1, 2.0 * pi));
  CHECK(std::abs(clock.transformed_period() - 6.3786250848450029389) < 1e-10);
  const double t = 0.3 * clock.period();
  CHECK(std::abs(clock.inverse(clock.forward(t)) - t) < 1e-10);
  CHECK(std::abs(clock.forward(t + clock.period()) - clock.forward(t) - clock.transformed_period()) < 1e-10);
}

TEST_CASE("transformed force") {
  const FrameClock still(WallMotion(0.0, 1.0));
  CHECK(force(still, 0.3, 0.7) == 0.0);
  const FrameClock clock(WallMotion(0.1, 1.0));
  CHECK(force(clock, 0.2, 0.0) == 0.0);
  CHECK(std::abs(force(clock, 0.0, 0.5)) < 1e-12);
  const double tbar = clock.forward(0.25);
  CHECK(force(clock, tbar, 0.6) == doctest::Approx(0.4 * pi * pi * 1.331 * 0.6).epsilon(1e-10));
}

TEST_CASE("maxwellians") {
  CHECK(maxwellian(Velocity{0, 0, 0}) == doctest::Approx(std::pow(2.0 * pi, -1.5)));
  const WallMotion still(0.0, 1.0);
  const FrameClock clock(still);
  const Velocity v{0.3, -1.2, 0.5};
  CHECK(local_maxwellian(still, 0.4, 0.5, v) == doctest::Approx(maxwellian(v)));
  CHECK(wall_maxwellian_fixed(clock, 0.2, v) == doctest::Approx(maxwellian(v)));
}
