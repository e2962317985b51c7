#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "kinetics/characteristics.hpp"
#include "kinetics/wall_kinematics.hpp"

namespace kinetics {

/// Point outside the physical domain for the requested frame.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Moving slab (0, X_w(t)) -> fixed slab (0, 1):
/// xbar = x / X_w, vbar1 = v1 X_w - x V_w, tbar = clock(t).
PhasePoint to_fixed(const FrameClock& clock, const PhasePoint& moving);
PhasePoint to_moving(const FrameClock& clock, const PhasePoint& fixed);

/// Jacobian determinant of (x, v1) -> (xbar, vbar1) at fixed t, by central differences.
double jacobian_determinant(const FrameClock& clock, const PhasePoint& moving, double eps = 1e-6);

struct EquivalenceStats {
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  double max_field_deviation = 0.0;
  std::size_t samples = 0;
};

/// Scalar field on the fixed slab, F(tbar, xbar, vbar).
using FixedFieldSampler = std::function<double(const PhasePoint&)>;

/// Free flight in the moving slab, mapped to the fixed slab, compared with the
/// RK4 characteristic of the transformed force. A field sampler (optional) is
/// compared at both endpoints. `time_shift` offsets every sample start time.
EquivalenceStats equivalence_residual(const FrameClock& clock, const FixedFieldSampler& field,
                                      std::size_t n_samples, std::uint64_t seed,
                                      double time_shift = 0.0);

}  // namespace kinetics
