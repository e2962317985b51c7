#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kinetics/phase_grid.hpp"
#include "kinetics/wall_kinematics.hpp"

namespace kinetics {

/// Half-space flux quadratures at the walls, built from the volume weights.
/// The discrete constant `reflection_constant()` replaces sqrt(2 pi) so that
/// sqrt(mu) is reproduced exactly by the diffuse-reflection projection.
class WallQuadrature {
 public:
  explicit WallQuadrature(const VelocityGrid& grid);

  const VelocityGrid& grid() const { return grid_; }
  /// sum over {n.v > 0} of f |v1| dv (outgoing side of `wall`).
  double outgoing_flux(std::span<const double> values, int wall) const;
  /// sum over {n.v < 0} of f |v1| dv.
  double incoming_flux(std::span<const double> values, int wall) const;
  /// sum over {n.v > 0} of f sqrt(mu) |v1| dv.
  double outgoing_moment(std::span<const double> values, int wall) const;
  /// Grid value of int_{v1 > 0} mu v1 dv; equal on both half spaces.
  double maxwellian_flux() const { return maxwellian_flux_; }
  /// 1 / maxwellian_flux(); tends to sqrt(2 pi) under refinement.
  double reflection_constant() const { return 1.0 / maxwellian_flux_; }

 private:
  VelocityGrid grid_;
  double maxwellian_flux_ = 0.0;
};

/// Wall Maxwellian mu_bar_w at wall position X, rescaled so its incoming flux on
/// the grid equals that of mu (the analytic fluxes agree exactly).
std::vector<double> discrete_wall_maxwellian(const VelocityGrid& grid, double wall_position);

/// P_gamma on one wall: incoming nodes receive c sqrt(mu) sum_out f sqrt(mu) |v1| dv,
/// outgoing nodes of `out` are left untouched (zero).
void p_gamma_wall(const WallQuadrature& quad, std::span<const double> outgoing, int wall,
                  std::span<double> incoming);
/// P_gamma on a whole trace (outgoing -> incoming).
BoundaryTrace p_gamma(const WallQuadrature& quad, const BoundaryTrace& outgoing);

struct ReflectionResult {
  bool negative_input = false;  // diagnostic only
  double outgoing_flux = 0.0;
  double incoming_flux = 0.0;
};
/// Diffuse reflection of an F-level trace at one wall with the discrete wall Maxwellian.
ReflectionResult diffuse_reflect_F(const WallQuadrature& quad, double wall_position,
                                   std::span<const double> outgoing, int wall,
                                   std::span<double> incoming);
/// Same over a full trace; slice `it` uses the wall at transformed time it * dt.
BoundaryTrace diffuse_reflect_F(const WallQuadrature& quad, const FrameClock& clock,
                                const SpaceTimeGrid& st, const BoundaryTrace& outgoing,
                                bool* negative_input = nullptr);

/// r = (mu_bar_w - mu) / sqrt(mu) * (1 + c sum_out f sqrt(mu) |v1| dv) on the
/// incoming nodes of `wall`; its P_gamma vanishes on the grid.
void nonlinear_boundary_source(const WallQuadrature& quad, std::span<const double> wall_maxwellian,
                               std::span<const double> outgoing, int wall,
                               std::span<double> incoming);
BoundaryTrace nonlinear_boundary_source(const WallQuadrature& quad, const FrameClock& clock,
                                        const SpaceTimeGrid& st, const BoundaryTrace& outgoing);

/// <r, sqrt(mu)> on the incoming half space of `wall`.
double incoming_mass(const WallQuadrature& quad, std::span<const double> incoming, int wall);

struct WallFluxes {
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};
/// Fluxes of F through the wall along the outward normal: sum (n.v) F psi dv with
/// psi = 1, v, |v|^2 / 2. `values` holds F at every velocity node of the wall.
WallFluxes flux_functionals(const VelocityGrid& grid, std::span<const double> values, int wall);

/// F-level wall values assembled from f-level outgoing and incoming traces.
std::vector<double> wall_distribution(const VelocityGrid& grid, const BoundaryTrace& outgoing,
                                      const BoundaryTrace& incoming, std::size_t it, int wall);

/// CSV with one row per (slice, wall): t, wall, mass, momentum_1..3, energy.
void write_boundary_csv(const std::string& path, const VelocityGrid& grid, const SpaceTimeGrid& st,
                        const BoundaryTrace& outgoing, const BoundaryTrace& incoming);

}  // namespace kinetics
