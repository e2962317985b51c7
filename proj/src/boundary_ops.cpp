#include "kinetics/boundary_ops.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace kinetics {

WallQuadrature::WallQuadrature(const VelocityGrid& grid) : grid_(grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v1 = grid_.node(i)[0];
    if (v1 > 0.0) s += grid_.mu()[i] * v1;
  }
  maxwellian_flux_ = s * grid_.cell_volume();
}

double WallQuadrature::outgoing_flux(std::span<const double> values, int wall) const {
  double s = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v1 = grid_.node(i)[0];
    if (on_side(v1, wall, TraceSide::outgoing)) s += values[i] * std::abs(v1);
  }
  return s * grid_.cell_volume();
}

double WallQuadrature::incoming_flux(std::span<const double> values, int wall) const {
  double s = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v1 = grid_.node(i)[0];
    if (on_side(v1, wall, TraceSide::incoming)) s += values[i] * std::abs(v1);
  }
  return s * grid_.cell_volume();
}

double WallQuadrature::outgoing_moment(std::span<const double> values, int wall) const {
  double s = 0.0;
  const auto sm = grid_.sqrt_mu();
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v1 = grid_.node(i)[0];
    if (on_side(v1, wall, TraceSide::outgoing)) s += values[i] * sm[i] * std::abs(v1);
  }
  return s * grid_.cell_volume();
}

std::vector<double> discrete_wall_maxwellian(const VelocityGrid& grid, double wall_position) {
  std::vector<double> m(grid.size());
  double flux = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    m[i] = wall_maxwellian_fixed_at(wall_position, grid.node(i));
    const double v1 = grid.node(i)[0];
    if (v1 > 0.0) flux += m[i] * v1;
  }
  const double target = WallQuadrature(grid).maxwellian_flux() / grid.cell_volume();
  for (auto& x : m) x *= target / flux;
  return m;
}

void p_gamma_wall(const WallQuadrature& quad, std::span<const double> outgoing, int wall,
                  std::span<double> incoming) {
  const auto& g = quad.grid();
  const double c = quad.reflection_constant() * quad.outgoing_moment(outgoing, wall);
  const auto sm = g.sqrt_mu();
  for (std::size_t i = 0; i < g.size(); ++i)
    incoming[i] = on_side(g.node(i)[0], wall, TraceSide::incoming) ? c * sm[i] : 0.0;
}

BoundaryTrace p_gamma(const WallQuadrature& quad, const BoundaryTrace& outgoing) {
  BoundaryTrace in(outgoing.nt(), outgoing.nv(), TraceSide::incoming);
  for (std::size_t it = 0; it < outgoing.nt(); ++it)
    for (int w = 0; w < 2; ++w) p_gamma_wall(quad, outgoing.wall(it, w), w, in.wall(it, w));
  return in;
}

ReflectionResult diffuse_reflect_F(const WallQuadrature& quad, double wall_position,
                                   std::span<const double> outgoing, int wall,
                                   std::span<double> incoming) {
  const auto& g = quad.grid();
  ReflectionResult res;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (on_side(g.node(i)[0], wall, TraceSide::outgoing) && outgoing[i] < 0.0)
      res.negative_input = true;
  res.outgoing_flux = quad.outgoing_flux(outgoing, wall);
  const auto m = discrete_wall_maxwellian(g, wall_position);
  const double c = res.outgoing_flux * quad.reflection_constant();
  for (std::size_t i = 0; i < g.size(); ++i)
    incoming[i] = on_side(g.node(i)[0], wall, TraceSide::incoming) ? c * m[i] : 0.0;
  res.incoming_flux = quad.incoming_flux(incoming, wall);
  return res;
}

BoundaryTrace diffuse_reflect_F(const WallQuadrature& quad, const FrameClock& clock,
                                const SpaceTimeGrid& st, const BoundaryTrace& outgoing,
                                bool* negative_input) {
  BoundaryTrace in(outgoing.nt(), outgoing.nv(), TraceSide::incoming);
  bool negative = false;
  for (std::size_t it = 0; it < outgoing.nt(); ++it) {
    const double x_w = clock.wall_state_at(st.t(it)).position;
    for (int w = 0; w < 2; ++w)
      negative |= diffuse_reflect_F(quad, x_w, outgoing.wall(it, w), w, in.wall(it, w)).negative_input;
  }
  if (negative_input) *negative_input = negative;
  return in;
}

void nonlinear_boundary_source(const WallQuadrature& quad, std::span<const double> wall_maxwellian,
                               std::span<const double> outgoing, int wall,
                               std::span<double> incoming) {
  const auto& g = quad.grid();
  const double amp = 1.0 + quad.reflection_constant() * quad.outgoing_moment(outgoing, wall);
  const auto mu = g.mu();
  const auto sm = g.sqrt_mu();
  for (std::size_t i = 0; i < g.size(); ++i)
    incoming[i] = on_side(g.node(i)[0], wall, TraceSide::incoming)
                      ? (wall_maxwellian[i] - mu[i]) / sm[i] * amp
                      : 0.0;
}

BoundaryTrace nonlinear_boundary_source(const WallQuadrature& quad, const FrameClock& clock,
                                        const SpaceTimeGrid& st, const BoundaryTrace& outgoing) {
  BoundaryTrace r(outgoing.nt(), outgoing.nv(), TraceSide::incoming);
  for (std::size_t it = 0; it < outgoing.nt(); ++it) {
    const auto m = discrete_wall_maxwellian(quad.grid(), clock.wall_state_at(st.t(it)).position);
    for (int w = 0; w < 2; ++w) nonlinear_boundary_source(quad, m, outgoing.wall(it, w), w, r.wall(it, w));
  }
  return r;
}

double incoming_mass(const WallQuadrature& quad, std::span<const double> incoming, int wall) {
  const auto& g = quad.grid();
  const auto sm = g.sqrt_mu();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v1 = g.node(i)[0];
    if (on_side(v1, wall, TraceSide::incoming)) s += incoming[i] * sm[i] * std::abs(v1);
  }
  return s * g.cell_volume();
}

WallFluxes flux_functionals(const VelocityGrid& grid, std::span<const double> values, int wall) {
  WallFluxes f;
  const double n = outward_normal(wall);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& v = grid.node(i);
    const double a = n * v[0] * values[i];
    f.mass += a;
    for (int c = 0; c < 3; ++c) f.momentum[c] += a * v[c];
    f.energy += 0.5 * a * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }
  const double dv = grid.cell_volume();
  f.mass *= dv;
  for (auto& m : f.momentum) m *= dv;
  f.energy *= dv;
  return f;
}

std::vector<double> wall_distribution(const VelocityGrid& grid, const BoundaryTrace& outgoing,
                                      const BoundaryTrace& incoming, std::size_t it, int wall) {
  std::vector<double> F(grid.size());
  const auto out = outgoing.wall(it, wall);
  const auto in = incoming.wall(it, wall);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = on_side(grid.node(i)[0], wall, TraceSide::outgoing) ? out[i] : in[i];
    F[i] = grid.mu()[i] + grid.sqrt_mu()[i] * f;
  }
  return F;
}

void write_boundary_csv(const std::string& path, const VelocityGrid& grid, const SpaceTimeGrid& st,
                        const BoundaryTrace& outgoing, const BoundaryTrace& incoming) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,wall,mass,momentum_1,momentum_2,momentum_3,energy\n" << std::setprecision(12);
  for (std::size_t it = 0; it < outgoing.nt(); ++it)
    for (int w = 0; w < 2; ++w) {
      const auto f = flux_functionals(grid, wall_distribution(grid, outgoing, incoming, it, w), w);
      os << st.t(it) << ',' << w << ',' << f.mass << ',' << f.momentum[0] << ',' << f.momentum[1]
         << ',' << f.momentum[2] << ',' << f.energy << '\n';
    }
}

}  // namespace kinetics
