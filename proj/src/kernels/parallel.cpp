#include <algorithm>
#include <vector>

#include "bilinear_common.hpp"
#include "daccn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace daccn::kernels {

void set_num_threads(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, threads));
#else
  (void)threads;
#endif
}

int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Output columns [lo, hi) whose input column ox*stride + offset lies in [0, extent).
inline void valid_range(std::int64_t offset, std::int64_t stride, std::int64_t extent, std::int64_t out_extent,
                        std::int64_t& lo, std::int64_t& hi) {
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const auto last = extent - 1 - offset;
  hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

namespace parallel {

void conv2d_forward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> output) {
  const auto in_plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
  const auto ksize = g.kernel_h * g.kernel_w;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t f = 0; f < g.out_channels; ++f) {
      Real* out = output.data() + (n * g.out_channels + f) * out_plane;
      std::fill(out, out + out_plane, bias.empty() ? Real(0) : bias[f]);
      for (std::int64_t c = 0; c < g.in_channels; ++c) {
        const Real* in = input.data() + (n * g.in_channels + c) * in_plane;
        const Real* wk = weight.data() + (f * g.in_channels + c) * ksize;
        for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
          for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
            const Real w = wk[ky * g.kernel_w + kx];
            std::int64_t x_lo, x_hi;
            valid_range(kx - g.padding, g.stride, g.in_w, g.out_w, x_lo, x_hi);
            for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
              const auto iy = oy * g.stride + ky - g.padding;
              if (iy < 0 || iy >= g.in_h) continue;
              Real* orow = out + oy * g.out_w;
              const Real* irow = in + iy * g.in_w + kx - g.padding;
              if (g.stride == 1) {
                for (std::int64_t ox = x_lo; ox < x_hi; ++ox) orow[ox] += w * irow[ox];
              } else {
                for (std::int64_t ox = x_lo; ox < x_hi; ++ox) orow[ox] += w * irow[ox * g.stride];
              }
            }
          }
      }
    }
}

void conv2d_backward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight,
                     std::span<const Real> grad_out, std::span<Real> grad_input, std::span<Real> grad_weight,
                     std::span<Real> grad_bias) {
  const auto in_plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
  const auto ksize = g.kernel_h * g.kernel_w;

  if (!grad_input.empty()) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n)
      for (std::int64_t c = 0; c < g.in_channels; ++c) {
        Real* gin = grad_input.data() + (n * g.in_channels + c) * in_plane;
        for (std::int64_t f = 0; f < g.out_channels; ++f) {
          const Real* go = grad_out.data() + (n * g.out_channels + f) * out_plane;
          const Real* wk = weight.data() + (f * g.in_channels + c) * ksize;
          for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
            for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
              const Real w = wk[ky * g.kernel_w + kx];
              std::int64_t x_lo, x_hi;
              valid_range(kx - g.padding, g.stride, g.in_w, g.out_w, x_lo, x_hi);
              for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
                const auto iy = oy * g.stride + ky - g.padding;
                if (iy < 0 || iy >= g.in_h) continue;
                const Real* grow = go + oy * g.out_w;
                Real* irow = gin + iy * g.in_w + kx - g.padding;
                if (g.stride == 1) {
                  for (std::int64_t ox = x_lo; ox < x_hi; ++ox) irow[ox] += w * grow[ox];
                } else {
                  for (std::int64_t ox = x_lo; ox < x_hi; ++ox) irow[ox * g.stride] += w * grow[ox];
                }
              }
            }
        }
      }
  }

  if (!grad_weight.empty() || !grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < g.out_channels; ++f) {
      // Column-wise partial sums vectorize; they are reduced in a fixed order at the end.
      std::vector<Real> partial(static_cast<std::size_t>(g.out_w));
      if (!grad_bias.empty()) {
        Real acc = 0;
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const Real* go = grad_out.data() + (n * g.out_channels + f) * out_plane;
          for (std::int64_t i = 0; i < out_plane; ++i) acc += go[i];
        }
        grad_bias[f] += acc;
      }
      if (grad_weight.empty()) continue;
      for (std::int64_t c = 0; c < g.in_channels; ++c)
        for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
          for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
            std::int64_t x_lo, x_hi;
            valid_range(kx - g.padding, g.stride, g.in_w, g.out_w, x_lo, x_hi);
            std::fill(partial.begin(), partial.end(), Real(0));
            Real* acc_row = partial.data();
            for (std::int64_t n = 0; n < g.batch; ++n) {
              const Real* go = grad_out.data() + (n * g.out_channels + f) * out_plane;
              const Real* in = input.data() + (n * g.in_channels + c) * in_plane;
              for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
                const auto iy = oy * g.stride + ky - g.padding;
                if (iy < 0 || iy >= g.in_h) continue;
                const Real* grow = go + oy * g.out_w;
                const Real* irow = in + iy * g.in_w + kx - g.padding;
                if (g.stride == 1) {
                  for (std::int64_t ox = x_lo; ox < x_hi; ++ox) acc_row[ox] += grow[ox] * irow[ox];
                } else {
                  for (std::int64_t ox = x_lo; ox < x_hi; ++ox) acc_row[ox] += grow[ox] * irow[ox * g.stride];
                }
              }
            }
            Real acc = 0;
            for (std::int64_t ox = x_lo; ox < x_hi; ++ox) acc += acc_row[ox];
            grad_weight[((f * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] += acc;
          }
    }
  }
}

void bilinear_forward(const SampleGeometry& g, std::span<const Real> input, std::span<const Real> grid,
                      std::span<Real> output) {
  const auto plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t oy = 0; oy < g.out_h; ++oy)
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        const auto gi = ((n * g.out_h + oy) * g.out_w + ox) * 2;
        const auto tx = detail::axis_tap(grid[gi], g.in_w);
        const auto ty = detail::axis_tap(grid[gi + 1], g.in_h);
        const Real w00 = (1 - tx.frac) * (1 - ty.frac), w01 = tx.frac * (1 - ty.frac);
        const Real w10 = (1 - tx.frac) * ty.frac, w11 = tx.frac * ty.frac;
        const auto i00 = ty.lo * g.in_w + tx.lo, i01 = ty.lo * g.in_w + tx.hi;
        const auto i10 = ty.hi * g.in_w + tx.lo, i11 = ty.hi * g.in_w + tx.hi;
        for (std::int64_t c = 0; c < g.channels; ++c) {
          const Real* src = input.data() + (n * g.channels + c) * plane;
          output[(n * g.channels + c) * out_plane + oy * g.out_w + ox] =
              w00 * src[i00] + w01 * src[i01] + w10 * src[i10] + w11 * src[i11];
        }
      }
}

void bilinear_backward(const SampleGeometry& g, std::span<const Real> input, std::span<const Real> grid,
                       std::span<const Real> grad_out, std::span<Real> grad_input, std::span<Real> grad_grid) {
  const auto plane = g.in_h * g.in_w;
  const auto out_plane = g.out_h * g.out_w;
  if (!grad_input.empty()) {
    // Scatter: each (n, c) plane of grad_input is owned by one thread.
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n)
      for (std::int64_t c = 0; c < g.channels; ++c) {
        Real* gin = grad_input.data() + (n * g.channels + c) * plane;
        const Real* go = grad_out.data() + (n * g.channels + c) * out_plane;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy)
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const auto gi = ((n * g.out_h + oy) * g.out_w + ox) * 2;
            const auto tx = detail::axis_tap(grid[gi], g.in_w);
            const auto ty = detail::axis_tap(grid[gi + 1], g.in_h);
            const Real v = go[oy * g.out_w + ox];
            gin[ty.lo * g.in_w + tx.lo] += v * (1 - tx.frac) * (1 - ty.frac);
            gin[ty.lo * g.in_w + tx.hi] += v * tx.frac * (1 - ty.frac);
            gin[ty.hi * g.in_w + tx.lo] += v * (1 - tx.frac) * ty.frac;
            gin[ty.hi * g.in_w + tx.hi] += v * tx.frac * ty.frac;
          }
      }
  }
  if (!grad_grid.empty()) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < g.batch; ++n)
      for (std::int64_t oy = 0; oy < g.out_h; ++oy)
        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
          const auto gi = ((n * g.out_h + oy) * g.out_w + ox) * 2;
          const auto tx = detail::axis_tap(grid[gi], g.in_w);
          const auto ty = detail::axis_tap(grid[gi + 1], g.in_h);
          Real dgx = 0, dgy = 0;
          for (std::int64_t c = 0; c < g.channels; ++c) {
            const Real go = grad_out[(n * g.channels + c) * out_plane + oy * g.out_w + ox];
            const Real* src = input.data() + (n * g.channels + c) * plane;
            const Real v00 = src[ty.lo * g.in_w + tx.lo], v01 = src[ty.lo * g.in_w + tx.hi];
            const Real v10 = src[ty.hi * g.in_w + tx.lo], v11 = src[ty.hi * g.in_w + tx.hi];
            dgx += go * ((1 - ty.frac) * (v01 - v00) + ty.frac * (v11 - v10));
            dgy += go * ((1 - tx.frac) * (v10 - v00) + tx.frac * (v11 - v01));
          }
          grad_grid[gi] += dgx * tx.dpix_dnorm;
          grad_grid[gi + 1] += dgy * ty.dpix_dnorm;
        }
  }
}

void cumsum_from_bottom(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output) {
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < g.planes; ++p) {
    const Real* in = input.data() + p * g.h * g.w;
    Real* out = output.data() + p * g.h * g.w;
    const auto last = (g.h - 1) * g.w;
    std::copy(in + last, in + last + g.w, out + last);
    for (std::int64_t row = g.h - 2; row >= 0; --row)
      for (std::int64_t col = 0; col < g.w; ++col)
        out[row * g.w + col] = in[row * g.w + col] + out[(row + 1) * g.w + col];
  }
}

void cumsum_from_top(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output) {
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < g.planes; ++p) {
    const Real* in = input.data() + p * g.h * g.w;
    Real* out = output.data() + p * g.h * g.w;
    std::copy(in, in + g.w, out);
    for (std::int64_t row = 1; row < g.h; ++row)
      for (std::int64_t col = 0; col < g.w; ++col)
        out[row * g.w + col] = in[row * g.w + col] + out[(row - 1) * g.w + col];
  }
}

}  // namespace parallel
}  // namespace daccn::kernels
