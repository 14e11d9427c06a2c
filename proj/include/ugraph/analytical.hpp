#pragma once

#include <limits>

#include "ugraph/types.hpp"

namespace ugraph {

inline constexpr double kDefaultForceFloor = 0.1;  // N

/// Closed-form lever arm from one wrench: r = (F x tau) / |F|^2.
///
/// Only the component of the offset perpendicular to F is observable; the
/// parallel part is reported as zero. With tau = r x F this recovers
/// r - (r . f) f for unit force direction f. The estimate has no std.
inline ComEstimate solve_com_analytical(const Wrench& w, double force_floor = kDefaultForceFloor) {
  const double f2 = w.force.squaredNorm();
  if (!(std::sqrt(f2) > force_floor))
    throw InsufficientSignalError("force reading below floor; insufficient signal");
  ComEstimate e;
  e.mean = w.force.cross(w.torque) / f2;
  e.std = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  e.std_defined = false;
  return e;
}

}  // namespace ugraph
