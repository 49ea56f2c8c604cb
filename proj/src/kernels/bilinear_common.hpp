#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "daccn/kernels.hpp"

namespace daccn::kernels::detail {

// One axis of a border-clamped bilinear tap.
struct AxisTap {
  std::int64_t lo, hi;  // neighbouring pixel indices (hi == lo at the border)
  Real frac;            // weight of `hi`
  Real dpix_dnorm;      // d(pixel coord)/d(normalized coord); 0 when clamped
};

inline AxisTap axis_tap(Real norm, std::int64_t extent) {
  AxisTap tap{0, 0, 0, 0};
  if (extent <= 1) return tap;
  const Real scale = Real(0.5) * static_cast<Real>(extent - 1);
  Real pix = (norm + 1) * scale;
  const Real last = static_cast<Real>(extent - 1);
  if (pix <= 0) {
    pix = 0;
  } else if (pix >= last) {
    pix = last;
  } else {
    tap.dpix_dnorm = scale;
    const Real nearest = std::round(pix);
    if (std::abs(pix - nearest) < static_cast<Real>(kSampleSnap)) pix = nearest;
  }
  const Real base = std::floor(pix);
  tap.lo = static_cast<std::int64_t>(base);
  tap.hi = std::min(tap.lo + 1, extent - 1);
  tap.frac = pix - base;
  return tap;
}

}  // namespace daccn::kernels::detail
