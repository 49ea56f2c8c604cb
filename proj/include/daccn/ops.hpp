#pragma once

#include <vector>

#include "daccn/autodiff.hpp"
#include "daccn/tensor.hpp"

namespace daccn {

// Elementwise arithmetic. Operands broadcast NumPy-style after left-padding
// the lower-rank shape with ones; a one-element tensor broadcasts anywhere.
enum class BinaryOp { add, sub, mul, div };

Tensor elementwise(BinaryOp kind, const Tensor& a, const Tensor& b);
Tensor elementwise(BinaryOp kind, const Tensor& a, Real b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, Real b);
Tensor operator-(const Tensor& a, Real b);
Tensor operator*(const Tensor& a, Real b);
Tensor operator/(const Tensor& a, Real b);
Tensor operator+(Real a, const Tensor& b);
Tensor operator-(Real a, const Tensor& b);
Tensor operator*(Real a, const Tensor& b);
Tensor operator-(const Tensor& a);

enum class Activation { elu, sigmoid, identity };

Tensor activation(Activation kind, const Tensor& x);
Tensor elu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);   // DomainError on any value <= 0
Tensor sqrt(const Tensor& x);  // DomainError on any value < 0
Tensor abs(const Tensor& x);   // subgradient 0 at 0
Tensor square(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, Real lo, Real hi);
// Elementwise minimum of equal-shape tensors; gradient goes to the smaller (ties: a).
Tensor minimum(const Tensor& a, const Tensor& b);

enum class Reduction { mean, sum };

// Empty `axes` reduces over every axis.
Tensor reduce(Reduction kind, const Tensor& x, std::vector<int> axes = {}, bool keepdim = false);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length);
Tensor concat(const std::vector<Tensor>& parts, int axis);

/// Cross-correlation with zero padding. input [N,C,H,W], weight [F,C,kH,kW],
/// bias [F] or undefined. Output side is (H + 2*padding - kH) / stride + 1 and
/// the division must be exact.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::int64_t stride = 1,
              std::int64_t padding = 0);

/// Bilinear resampling with border clamping. grid is [N,H',W',2] holding
/// (x, y) in [-1, 1], where -1 and +1 are the centres of the first and last
/// pixel. Differentiable in both input and grid.
Tensor bilinear_sample(const Tensor& input, const Tensor& grid);

/// out[p] = sum of rows p..H-1, per batch, channel and column.
Tensor cumsum_from_bottom(const Tensor& input);

Tensor upsample_nearest2x(const Tensor& x);

// Unpadded average pooling over square windows.
Tensor avg_pool2d(const Tensor& x, std::int64_t kernel, std::int64_t stride);

// Mirror padding without edge repetition (pad < H and pad < W).
Tensor pad_reflect(const Tensor& x, std::int64_t pad);

// Resizes [N,C,H,W] to [N,C,out_h,out_w] by bilinear sampling on corner-aligned grids.
Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

// Normalized corner-aligned identity grid [N,H,W,2].
Tensor identity_grid(std::int64_t batch, std::int64_t h, std::int64_t w);

}  // namespace daccn
