#pragma once

// Independent reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <vector>

#include "daccn/synthdata.hpp"
#include "daccn/tensor.hpp"

namespace daccn::testing {

inline Real elu_ref(Real x) { return x > 0 ? x : std::exp(x) - 1; }

// Nested-loop cumulative convolution: zero-padded 3x3 conv, then for every
// (p, q) the mean of conv rows p..H-1 in column q, then ELU.
inline std::vector<Real> brute_force_cc(const Tensor& x, const Tensor& w, const Tensor& b) {
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3), f = w.dim(0);
  auto conv = [&](std::int64_t ni, std::int64_t fi, std::int64_t i, std::int64_t j) {
    Real acc = b.at({fi});
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t ki = 0; ki < 3; ++ki)
        for (std::int64_t kj = 0; kj < 3; ++kj) {
          const auto y = i + ki - 1, xx = j + kj - 1;
          if (y < 0 || y >= h || xx < 0 || xx >= wd) continue;
          acc += w.at({fi, ci, ki, kj}) * x.at({ni, ci, y, xx});
        }
    return acc;
  };
  std::vector<Real> out;
  for (std::int64_t ni = 0; ni < n; ++ni)
    for (std::int64_t fi = 0; fi < f; ++fi)
      for (std::int64_t p = 0; p < h; ++p)
        for (std::int64_t q = 0; q < wd; ++q) {
          Real s = 0;
          for (std::int64_t i = p; i < h; ++i) s += conv(ni, fi, i, q);
          out.push_back(elu_ref(s / static_cast<Real>(h - p)));
        }
  return out;
}

// Bilinear lookup in a [C,H,W] image at pixel coordinates, border clamped.
inline Real bilinear_at(const Tensor& img, std::int64_t c, Real y, Real x) {
  const auto h = img.dim(1), w = img.dim(2);
  const auto x0 = static_cast<std::int64_t>(std::floor(x)), y0 = static_cast<std::int64_t>(std::floor(y));
  const Real fx = x - static_cast<Real>(x0), fy = y - static_cast<Real>(y0);
  auto px = [&](std::int64_t i, std::int64_t j) {
    return img.at({c, std::clamp<std::int64_t>(i, 0, h - 1), std::clamp<std::int64_t>(j, 0, w - 1)});
  };
  return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) + fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

// Horizontal shift d minimizing sum (target(i, j) - source(i, j + d))^2 over interior pixels,
// from a 0.01 px scan refined by a parabola through the best three samples.
inline Real measure_shift(const Tensor& target, const Tensor& source, Real guess) {
  const auto h = target.dim(1), w = target.dim(2);
  auto cost = [&](Real d) {
    Real s = 0;
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t i = 4; i < h - 4; ++i)
        for (std::int64_t j = 24; j < w - 24; ++j) {
          const Real e = target.at({c, i, j}) - bilinear_at(source, c, static_cast<Real>(i), static_cast<Real>(j) + d);
          s += e * e;
        }
    return s;
  };
  const Real step = 0.01;
  Real best = guess - 1, best_cost = cost(best);
  for (Real d = guess - 1; d <= guess + 1; d += step) {
    const Real c = cost(d);
    if (c < best_cost) best_cost = c, best = d;
  }
  const Real cm = cost(best - step), cp = cost(best + step);
  const Real denom = cm - 2 * best_cost + cp;
  return denom > 0 ? best + step * (cm - cp) / (2 * denom) : best;
}

// Textured fronto-parallel wall at depth z, nothing else.
inline Scene wall_scene(Real z) {
  Scene scene;
  scene.has_ground = false;
  scene.wall_z = z;
  scene.texture = make_texture(17, 3, 0.3);
  return scene;
}

}  // namespace daccn::testing
