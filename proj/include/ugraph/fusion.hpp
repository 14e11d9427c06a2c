#pragma once

#include <cmath>
#include <stdexcept>

#include "ugraph/types.hpp"

namespace ugraph {

/// Per-axis precision-weighted combination of two independent Gaussian estimates.
/// An infinite std on one side returns the other estimate unchanged.
inline ComEstimate fuse(const ComEstimate& a, const ComEstimate& b) {
  if (!a.std_defined || !b.std_defined) throw std::domain_error("fusion requires defined stds");
  if (!(a.std.minCoeff() > 0.0) || !(b.std.minCoeff() > 0.0))
    throw std::domain_error("fusion requires positive stds");
  ComEstimate out;
  for (int k = 0; k < 3; ++k) {
    const double pa = 1.0 / (a.std[k] * a.std[k]);
    const double pb = 1.0 / (b.std[k] * b.std[k]);
    const double total = pa + pb;
    out.mean[k] = a.mean[k] + (pb / total) * (b.mean[k] - a.mean[k]);
    out.std[k] = 1.0 / std::sqrt(total);
  }
  return out;
}

}  // namespace ugraph
