#include "daccn/daccn_ops.hpp"

#include <algorithm>
#include <cmath>

#include "daccn/errors.hpp"

namespace daccn {

DirectionScales DirectionScales::unit(bool requires_grad) {
  return {Tensor::scalar(0, requires_grad), Tensor::scalar(0, requires_grad)};
}

namespace {

Real effective_scale(const Tensor& log_s) {
  return std::clamp(static_cast<Real>(std::exp(log_s.item())), kMinDirectionScale, kMaxDirectionScale);
}

// Per-axis normalized source coordinate and its derivative w.r.t. the scale.
struct AxisCoords {
  std::vector<Real> coord;
  std::vector<Real> dcoord_dscale;
};

AxisCoords axis_coords(Real s, std::int64_t out_extent, std::int64_t sampled_extent, bool inverse) {
  AxisCoords a;
  a.coord.resize(static_cast<std::size_t>(out_extent));
  a.dcoord_dscale.assign(static_cast<std::size_t>(out_extent), 0);
  if (sampled_extent <= 1) {
    std::fill(a.coord.begin(), a.coord.end(), Real(-1));
    return a;
  }
  const Real to_norm = Real(2) / static_cast<Real>(sampled_extent - 1);
  for (std::int64_t j = 0; j < out_extent; ++j) {
    const auto jr = static_cast<Real>(j);
    const auto k = static_cast<std::size_t>(j);
    if (inverse) {
      a.coord[k] = jr * s * to_norm - 1;
      a.dcoord_dscale[k] = jr * to_norm;
    } else {
      a.coord[k] = jr / s * to_norm - 1;
      a.dcoord_dscale[k] = -jr / (s * s) * to_norm;
    }
  }
  return a;
}

}  // namespace

Real DirectionScales::sx() const { return effective_scale(log_sx); }
Real DirectionScales::sy() const { return effective_scale(log_sy); }
Tensor DirectionScales::scale_x() const { return clamp(exp(log_sx), kMinDirectionScale, kMaxDirectionScale); }
Tensor DirectionScales::scale_y() const { return clamp(exp(log_sy), kMinDirectionScale, kMaxDirectionScale); }

std::int64_t scaled_extent(Real scale, std::int64_t extent) {
  return std::max<std::int64_t>(1, std::llround(scale * static_cast<Real>(extent)));
}

AffineGrid affine_grid(const DirectionScales& scales, std::int64_t in_h, std::int64_t in_w, bool inverse,
                       std::int64_t batch) {
  if (in_h < 2 || in_w < 2) throw DimensionError("affine_grid: input spatial dims must be >= 2");
  const Tensor sx = scales.scale_x();
  const Tensor sy = scales.scale_y();
  const auto scaled_h = scaled_extent(sy.item(), in_h);
  const auto scaled_w = scaled_extent(sx.item(), in_w);

  AffineGrid result;
  result.out_h = inverse ? in_h : scaled_h;
  result.out_w = inverse ? in_w : scaled_w;
  // Forward mode samples the original map; inverse mode samples the scaled one.
  const auto ax = axis_coords(sx.item(), result.out_w, inverse ? scaled_w : in_w, inverse);
  const auto ay = axis_coords(sy.item(), result.out_h, inverse ? scaled_h : in_h, inverse);

  const auto oh = result.out_h, ow = result.out_w;
  std::vector<Real> grid(static_cast<std::size_t>(batch * oh * ow * 2));
  for (std::int64_t n = 0; n < batch; ++n)
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) {
        const auto k = static_cast<std::size_t>(((n * oh + i) * ow + j) * 2);
        grid[k] = ax.coord[static_cast<std::size_t>(j)];
        grid[k + 1] = ay.coord[static_cast<std::size_t>(i)];
      }
  result.grid = make_result("affine_grid", {batch, oh, ow, 2}, std::move(grid), {sx, sy},
                            [batch, oh, ow, dx = ax.dcoord_dscale, dy = ay.dcoord_dscale](Node& node) {
                              const auto go = node.grad_out();
                              Real gsx = 0, gsy = 0;
                              for (std::int64_t n = 0; n < batch; ++n)
                                for (std::int64_t i = 0; i < oh; ++i)
                                  for (std::int64_t j = 0; j < ow; ++j) {
                                    const auto k = static_cast<std::size_t>(((n * oh + i) * ow + j) * 2);
                                    gsx += go[k] * dx[static_cast<std::size_t>(j)];
                                    gsy += go[k + 1] * dy[static_cast<std::size_t>(i)];
                                  }
                              if (auto g = node.grad_in(0); !g.empty()) g[0] += gsx;
                              if (auto g = node.grad_in(1); !g.empty()) g[0] += gsy;
                            });
  return result;
}

Tensor ConvBlock::forward(const Tensor& x) const {
  return elu(conv2d(elu(conv2d(x, w1, b1, 1, 1)), w2, b2, 1, 1));
}

Tensor direction_aware_block(const Tensor& input, const DirectionScales& scales, const ConvBlock& block) {
  if (input.rank() != 4) throw DimensionError("direction_aware_block: input must be [N,C,H,W]");
  const auto n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const auto to_scaled = affine_grid(scales, h, w, false, n);
  const Tensor features = block.forward(bilinear_sample(input, to_scaled.grid));
  const auto back = affine_grid(scales, h, w, true, n);
  return bilinear_sample(features, back.grid);
}

Tensor cumulative_convolution(const Tensor& input, const CumulativeConvParams& params) {
  if (input.rank() != 4) throw DimensionError("cumulative_convolution: input must be [N,C,H,W]");
  if (params.weight.rank() != 4 || params.weight.dim(2) != 3 || params.weight.dim(3) != 3)
    throw DimensionError("cumulative_convolution: weight must be [F,C,3,3]");
  const auto h = input.dim(2);
  std::vector<Real> counts(static_cast<std::size_t>(h));
  for (std::int64_t p = 0; p < h; ++p) counts[static_cast<std::size_t>(p)] = static_cast<Real>(h - p);
  const Tensor rows_summed = Tensor::from_values({1, 1, h, 1}, std::move(counts));
  const Tensor features = conv2d(input, params.weight, params.bias, 1, 1);
  return activation(params.activation, cumsum_from_bottom(features) / rows_summed);
}

}  // namespace daccn
