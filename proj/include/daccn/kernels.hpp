#pragma once

// Raw compute kernels behind the differentiable ops.
//
// Every kernel exists twice: `serial` is the direct textbook loop nest kept as
// the reference, `parallel` is the cache-friendly OpenMP version the ops call.
// Parallel kernels split work only over independent outputs, so each output
// element is produced by one thread in a fixed summation order and results do
// not depend on the thread count. Backward kernels accumulate (+=) into their
// gradient buffers; an empty span skips that gradient.

#include <cstdint>
#include <span>

#include "daccn/tensor.hpp"

namespace daccn::kernels {

struct ConvGeometry {
  std::int64_t batch, in_channels, in_h, in_w;
  std::int64_t out_channels, kernel_h, kernel_w;
  std::int64_t stride, padding;
  std::int64_t out_h, out_w;
};

struct SampleGeometry {
  std::int64_t batch, channels, in_h, in_w;
  std::int64_t out_h, out_w;
};

struct PlaneGeometry {
  std::int64_t planes, h, w;  // planes = N * C
};

#define DACCN_KERNEL_SET                                                                                  \
  void conv2d_forward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight,  \
                      std::span<const Real> bias, std::span<Real> output);                              \
  void conv2d_backward(const ConvGeometry& g, std::span<const Real> input, std::span<const Real> weight, \
                       std::span<const Real> grad_out, std::span<Real> grad_input,                       \
                       std::span<Real> grad_weight, std::span<Real> grad_bias);                          \
  void bilinear_forward(const SampleGeometry& g, std::span<const Real> input, std::span<const Real> grid, \
                        std::span<Real> output);                                                         \
  void bilinear_backward(const SampleGeometry& g, std::span<const Real> input,                           \
                         std::span<const Real> grid, std::span<const Real> grad_out,                     \
                         std::span<Real> grad_input, std::span<Real> grad_grid);                         \
  void cumsum_from_bottom(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output);   \
  void cumsum_from_top(const PlaneGeometry& g, std::span<const Real> input, std::span<Real> output);

namespace serial {
DACCN_KERNEL_SET
}
namespace parallel {
DACCN_KERNEL_SET
}

#undef DACCN_KERNEL_SET

// Pixel coordinates within this distance of an integer are sampled as that
// integer, so identity and integer-shift grids reproduce the input bit-exactly.
inline constexpr double kSampleSnap = 1e-9;

// Sets the OpenMP thread count used by `parallel` kernels (no-op without OpenMP).
void set_num_threads(int threads);
int num_threads();

}  // namespace daccn::kernels
