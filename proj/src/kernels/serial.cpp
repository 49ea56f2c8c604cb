// Reference kernels: straightforward loop nests, one output element at a time.

#include "bilinear_common.hpp"
#include "daccn/kernels.hpp"

namespace daccn::kernels::serial {

void conv2d_forward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> output) {
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t f = 0; f < g.out_channels; ++f)
      for (std::int64_t oy = 0; oy < g.out_h; ++oy)
        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
          Real acc = bias.empty() ? Real(0) : bias[f];
          for (std::int64_t c = 0; c < g.in_channels; ++c)
            for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto iy = oy * g.stride + ky - g.padding;
                const auto ix = ox * g.stride + kx - g.padding;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += weight[((f * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] *
                       input[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix];
              }
          output[((n * g.out_channels + f) * g.out_h + oy) * g.out_w + ox] = acc;
        }
}

void conv2d_backward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight,
                     std::span<const Real> grad_out, std::span<Real> grad_input, std::span<Real> grad_weight,
                     std::span<Real> grad_bias) {
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t f = 0; f < g.out_channels; ++f)
      for (std::int64_t oy = 0; oy < g.out_h; ++oy)
        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
          const Real go = grad_out[((n * g.out_channels + f) * g.out_h + oy) * g.out_w + ox];
          if (!grad_bias.empty()) grad_bias[f] += go;
          for (std::int64_t c = 0; c < g.in_channels; ++c)
            for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto iy = oy * g.stride + ky - g.padding;
                const auto ix = ox * g.stride + kx - g.padding;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                const auto wi = ((f * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx;
                const auto ii = ((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix;
                if (!grad_weight.empty()) grad_weight[wi] += go * input[ii];
                if (!grad_input.empty()) grad_input[ii] += go * weight[wi];
              }
        }
}

void bilinear_forward(const SampleGeometry& g, std::span<const Real> input, std::span<const Real> grid,
                      std::span<Real> output) {
  const auto plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t oy = 0; oy < g.out_h; ++oy)
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        const auto gi = ((n * g.out_h + oy) * g.out_w + ox) * 2;
        const auto tx = detail::axis_tap(grid[gi], g.in_w);
        const auto ty = detail::axis_tap(grid[gi + 1], g.in_h);
        for (std::int64_t c = 0; c < g.channels; ++c) {
          const Real* src = input.data() + (n * g.channels + c) * plane;
          const Real v00 = src[ty.lo * g.in_w + tx.lo], v01 = src[ty.lo * g.in_w + tx.hi];
          const Real v10 = src[ty.hi * g.in_w + tx.lo], v11 = src[ty.hi * g.in_w + tx.hi];
          output[(n * g.channels + c) * out_plane + oy * g.out_w + ox] =
              (1 - tx.frac) * (1 - ty.frac) * v00 + tx.frac * (1 - ty.frac) * v01 +
              (1 - tx.frac) * ty.frac * v10 + tx.frac * ty.frac * v11;
        }
      }
}

void bilinear_backward(const SampleGeometry& g, std::span<const Real> input, std::span<const Real> grid,
                       std::span<const Real> grad_out, std::span<Real> grad_input, std::span<Real> grad_grid) {
  const auto plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t oy = 0; oy < g.out_h; ++oy)
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        const auto gi = ((n * g.out_h + oy) * g.out_w + ox) * 2;
        const auto tx = detail::axis_tap(grid[gi], g.in_w);
        const auto ty = detail::axis_tap(grid[gi + 1], g.in_h);
        Real dgx = 0, dgy = 0;
        for (std::int64_t c = 0; c < g.channels; ++c) {
          const Real go = grad_out[(n * g.channels + c) * out_plane + oy * g.out_w + ox];
          const auto base = (n * g.channels + c) * plane;
          if (!grad_input.empty()) {
            grad_input[base + ty.lo * g.in_w + tx.lo] += go * (1 - tx.frac) * (1 - ty.frac);
            grad_input[base + ty.lo * g.in_w + tx.hi] += go * tx.frac * (1 - ty.frac);
            grad_input[base + ty.hi * g.in_w + tx.lo] += go * (1 - tx.frac) * ty.frac;
            grad_input[base + ty.hi * g.in_w + tx.hi] += go * tx.frac * ty.frac;
          }
          const Real* src = input.data() + base;
          const Real v00 = src[ty.lo * g.in_w + tx.lo], v01 = src[ty.lo * g.in_w + tx.hi];
          const Real v10 = src[ty.hi * g.in_w + tx.lo], v11 = src[ty.hi * g.in_w + tx.hi];
          dgx += go * ((1 - ty.frac) * (v01 - v00) + ty.frac * (v11 - v10));
          dgy += go * ((1 - tx.frac) * (v10 - v00) + tx.frac * (v11 - v01));
        }
        if (!grad_grid.empty()) {
          grad_grid[gi] += dgx * tx.dpix_dnorm;
          grad_grid[gi + 1] += dgy * ty.dpix_dnorm;
        }
      }
}

void cumsum_from_bottom(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output) {
  for (std::int64_t p = 0; p < g.planes; ++p)
    for (std::int64_t row = 0; row < g.h; ++row)
      for (std::int64_t col = 0; col < g.w; ++col) {
        Real acc = 0;
        for (std::int64_t i = g.h - 1; i >= row; --i) acc += input[(p * g.h + i) * g.w + col];
        output[(p * g.h + row) * g.w + col] = acc;
      }
}

void cumsum_from_top(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output) {
  for (std::int64_t p = 0; p < g.planes; ++p)
    for (std::int64_t row = 0; row < g.h; ++row)
      for (std::int64_t col = 0; col < g.w; ++col) {
        Real acc = 0;
        for (std::int64_t i = 0; i <= row; ++i) acc += input[(p * g.h + i) * g.w + col];
        output[(p * g.h + row) * g.w + col] = acc;
      }
}

}  // namespace daccn::kernels::serial
