#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "doctest.h"

#include "kinetics/phase_grid.hpp"

using namespace kinetics;

namespace {
constexpr double tol_vquad = 1e-6;
PhaseGrid small_grid() { return PhaseGrid{VelocityGrid(5.4, 12), SpaceTimeGrid(4, 4, 1.0)}; }
}  // namespace

TEST_CASE("weight function values") {
  CHECK(WeightFunction()(Velocity{0, 0, 0}) == 1.0);
  CHECK(WeightFunction(4.0, 0.0)(Velocity{1, 0, 0}) == doctest::Approx(4.0));
  // (1 + 4)^{1.75} e^{0.5}, mpmath at 30 digits.
  CHECK(WeightFunction(3.5, 0.5)(Velocity{0, 2, 0}) == doctest::Approx(27.564159134727943748).epsilon(1e-14));
  CHECK_THROWS_AS(WeightFunction(3.0, 0.5), ConfigError);
  CHECK_THROWS_AS(WeightFunction(3.5, 1.0), ConfigError);
}

TEST_CASE("velocity grid") {
  const VelocityGrid vg(5.4, 12);
  CHECK(vg.size() == 1728);
  CHECK(vg.axis(0) == doctest::Approx(-4.95));
  CHECK(std::abs(vg.maxwellian_mass() - 1.0) < tol_vquad);
  for (std::size_t i : {0u, 17u, 900u}) {
    const auto r = vg.reflected(i);
    for (int c = 0; c < 3; ++c) CHECK(vg.node(r)[c] == doctest::Approx(-vg.node(i)[c]));
  }
  const auto gram = vg.gram();
  CHECK((gram - Eigen::Matrix<double, 5, 5>::Identity()).cwiseAbs().maxCoeff() < 5e-5);
  const Eigen::MatrixXd ortho = vg.invariants().transpose() * vg.invariants() * vg.cell_volume();
  CHECK((ortho - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(VelocityGrid(5.4, 7), ConfigError);
}

TEST_CASE("norms") {
  const auto grid = small_grid();
  const WeightFunction wf;
  auto f = grid.make_field();
  CHECK(norm_l2(grid, f) == 0.0);
  CHECK(norm_weighted_sup(grid, f, wf) == 0.0);
  const auto sqrt_mu = grid.velocity.sqrt_mu();
  for (std::size_t it = 0; it < f.nt(); ++it)
    for (std::size_t ix = 0; ix < f.nx(); ++ix)
      for (std::size_t iv = 0; iv < f.nv(); ++iv) f.at(it, ix, iv) = sqrt_mu[iv];
  CHECK(std::abs(norm_l2(grid, f) - 1.0) < tol_vquad);
  for (double m : slice_mass(grid, f)) CHECK(std::abs(m - 1.0) < tol_vquad);

  // Incoming half-moment at x = 0: int_{v1 < 0} mu |v1| dv = 1 / sqrt(2 pi).
  auto trace = grid.make_trace(TraceSide::incoming);
  for (std::size_t it = 0; it < trace.nt(); ++it)
    for (std::size_t iv = 0; iv < trace.nv(); ++iv)
      if (on_side(grid.velocity.node(iv)[0], 0, TraceSide::incoming)) trace.at(it, 0, iv) = sqrt_mu[iv];
  // The |v1| kink makes the midpoint rule second order: 4% at spacing 0.9.
  const double expected = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double norm = norm_boundary_l2pm(grid.velocity, trace);
  CHECK(std::abs(norm * norm - expected) < 0.04 * expected);
}

TEST_CASE("moments of the invariants") {
  const VelocityGrid vg(5.4, 12);
  std::vector<double> chi2(vg.size());
  for (std::size_t j = 0; j < vg.size(); ++j) chi2[j] = vg.chi(2, j);
  const auto m = moments(vg, chi2);
  CHECK(std::abs(m.mass) < 1e-12);
  CHECK(std::abs(m.momentum[1] - 1.0) < tol_vquad);
}

TEST_CASE("snapshot round trip") {
  const auto grid = small_grid();
  auto f = grid.make_field();
  for (std::size_t i = 0; i < f.size(); ++i) f.values()[i] = std::sin(0.01 * static_cast<double>(i));
  f.normalization = Normalization::F;
  const auto path = (std::filesystem::temp_directory_path() / "kinetics_snapshot_test.bin").string();
  write_snapshot(path, f, 5.4, WeightFunction(3.5, 0.5));
  SnapshotHeader header;
  const auto g = read_snapshot(path, &header);
  std::filesystem::remove(path);
  CHECK(g.same_shape(f));
  CHECK(header.v_max == 5.4);
  CHECK(header.normalization == Normalization::F);
  bool equal = true;
  for (std::size_t i = 0; i < f.size(); ++i) equal = equal && f.values()[i] == g.values()[i];
  CHECK(equal);
}
