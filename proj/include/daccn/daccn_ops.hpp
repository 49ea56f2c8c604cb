#pragma once

#include <cstdint>

#include "daccn/ops.hpp"
#include "daccn/tensor.hpp"

namespace daccn {

inline constexpr Real kMinDirectionScale = 0.25;
inline constexpr Real kMaxDirectionScale = 4.0;

/// Learnable anisotropic scaling A = diag(s_x, s_y, 1).
///
/// Scales are stored as free log-parameters; the effective scale is
/// clamp(exp(log_s), 0.25, 4), so it is always positive and starts at exactly 1.
struct DirectionScales {
  Tensor log_sx;  // [1]
  Tensor log_sy;  // [1]

  static DirectionScales unit(bool requires_grad = true);

  Real sx() const;
  Real sy() const;
  Tensor scale_x() const;  // differentiable effective scale, [1]
  Tensor scale_y() const;
};

struct AffineGrid {
  Tensor grid;  // [N, out_h, out_w, 2], normalized coordinates
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
};

// round(s * extent), floored at 1.
std::int64_t scaled_extent(Real scale, std::int64_t extent);

/// Sampling grid for the pure-scaling map about the top-left pixel centre.
///
/// Forward: output is (round(s_y*in_h), round(s_x*in_w)) and output pixel
/// (i, j) reads the input at (i / s_y, j / s_x). Inverse: output is
/// (in_h, in_w) and reads the scaled map at (i * s_y, j * s_x), so
/// inverse(forward(x)) returns to the original frame. The grid is
/// differentiable in log_sx and log_sy.
AffineGrid affine_grid(const DirectionScales& scales, std::int64_t in_h, std::int64_t in_w, bool inverse,
                       std::int64_t batch = 1);

/// Feature-extraction block F: two 3x3 same-size convolutions, each followed by ELU.
struct ConvBlock {
  Tensor w1, b1, w2, b2;
  Tensor forward(const Tensor& x) const;
};

/// A^-1 F(A x): resample onto the scaled grid, run F, resample back to (H, W).
Tensor direction_aware_block(const Tensor& input, const DirectionScales& scales, const ConvBlock& block);

struct CumulativeConvParams {
  Tensor weight;  // [F, C, 3, 3]
  Tensor bias;    // [F]
  Activation activation = Activation::elu;
};

/// act(Norm(ACC(conv3x3(x)))) where ACC sums rows p..H-1 of each column and
/// Norm divides row p by H - p, the number of rows summed.
Tensor cumulative_convolution(const Tensor& input, const CumulativeConvParams& params);

}  // namespace daccn
