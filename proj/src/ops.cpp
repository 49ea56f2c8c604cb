#include "daccn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "daccn/errors.hpp"
#include "daccn/kernels.hpp"

namespace daccn {

namespace {

std::vector<Real> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
}

Shape padded(const Shape& s, std::size_t rank) {
  Shape out(rank - s.size(), 1);
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const auto rank = std::max(a.size(), b.size());
  const auto pa = padded(a, rank), pb = padded(b, rank);
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] == pb[i] || pb[i] == 1) {
      out[i] = pa[i];
    } else if (pa[i] == 1) {
      out[i] = pb[i];
    } else {
      throw DimensionError("cannot broadcast " + shape_to_string(a) + " with " + shape_to_string(b));
    }
  }
  return out;
}

// Flat index into `in` for every flat index of `out`, where `in` broadcasts to `out`.
std::vector<std::int64_t> broadcast_index(const Shape& out, const Shape& in) {
  const auto rank = out.size();
  const auto pin = padded(in, rank);
  std::vector<std::int64_t> in_stride(rank, 0);
  std::int64_t stride = 1;
  for (std::size_t i = rank; i-- > 0;) {
    in_stride[i] = pin[i] == 1 ? 0 : stride;
    stride *= pin[i];
  }
  const auto total = shape_numel(out);
  std::vector<std::int64_t> index(static_cast<std::size_t>(total));
  std::vector<std::int64_t> counter(rank, 0);
  std::int64_t flat_in = 0;
  for (std::int64_t k = 0; k < total; ++k) {
    index[static_cast<std::size_t>(k)] = flat_in;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      flat_in += in_stride[d];
      if (counter[d] < out[d]) break;
      flat_in -= in_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return index;
}

template <typename Fwd, typename Dfdx>
Tensor unary(const char* name, const Tensor& x, Fwd fwd, Dfdx dfdx) {
  std::vector<Real> out(x.values().size());
  std::transform(x.values().begin(), x.values().end(), out.begin(), fwd);
  return make_result(name, x.shape(), std::move(out), {x}, [dfdx](Node& node) {
    auto gx = node.grad_in(0);
    if (gx.empty()) return;
    const auto& in = node.inputs[0]->data;
    const auto& y = node.output->data;
    const auto go = node.grad_out();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * dfdx(in[i], y[i]);
  });
}

}  // namespace

// ---------------------------------------------------------------- elementwise

Tensor elementwise(BinaryOp kind, const Tensor& a, const Tensor& b) {
  if (kind == BinaryOp::div &&
      std::any_of(b.values().begin(), b.values().end(), [](Real v) { return v == 0; }))
    throw DomainError("div: divisor contains an exact zero");

  const bool same = a.shape() == b.shape();
  const Shape out_shape = same ? a.shape() : broadcast_shape(a.shape(), b.shape());
  const auto total = static_cast<std::size_t>(shape_numel(out_shape));
  auto ia = std::make_shared<std::vector<std::int64_t>>();
  auto ib = std::make_shared<std::vector<std::int64_t>>();
  if (!same) {
    if (a.shape() != out_shape) *ia = broadcast_index(out_shape, a.shape());
    if (b.shape() != out_shape) *ib = broadcast_index(out_shape, b.shape());
  }
  const auto av = a.values(), bv = b.values();
  std::vector<Real> out(total);
  for (std::size_t k = 0; k < total; ++k) {
    const Real x = av[ia->empty() ? k : static_cast<std::size_t>((*ia)[k])];
    const Real y = bv[ib->empty() ? k : static_cast<std::size_t>((*ib)[k])];
    switch (kind) {
      case BinaryOp::add: out[k] = x + y; break;
      case BinaryOp::sub: out[k] = x - y; break;
      case BinaryOp::mul: out[k] = x * y; break;
      case BinaryOp::div: out[k] = x / y; break;
    }
  }
  static constexpr const char* names[] = {"add", "sub", "mul", "div"};
  return make_result(names[static_cast<int>(kind)], out_shape, std::move(out), {a, b},
                     [kind, ia, ib](Node& node) {
                       const auto& av = node.inputs[0]->data;
                       const auto& bv = node.inputs[1]->data;
                       const auto go = node.grad_out();
                       auto ga = node.grad_in(0);
                       auto gb = node.grad_in(1);
                       for (std::size_t k = 0; k < go.size(); ++k) {
                         const auto ka = ia->empty() ? k : static_cast<std::size_t>((*ia)[k]);
                         const auto kb = ib->empty() ? k : static_cast<std::size_t>((*ib)[k]);
                         Real da = 0, db = 0;
                         switch (kind) {
                           case BinaryOp::add: da = 1; db = 1; break;
                           case BinaryOp::sub: da = 1; db = -1; break;
                           case BinaryOp::mul: da = bv[kb]; db = av[ka]; break;
                           case BinaryOp::div:
                             da = 1 / bv[kb];
                             db = -av[ka] / (bv[kb] * bv[kb]);
                             break;
                         }
                         if (!ga.empty()) ga[ka] += go[k] * da;
                         if (!gb.empty()) gb[kb] += go[k] * db;
                       }
                     });
}

Tensor elementwise(BinaryOp kind, const Tensor& a, Real b) {
  if (kind == BinaryOp::div && b == 0) throw DomainError("div: scalar divisor is zero");
  switch (kind) {
    case BinaryOp::add: return unary("add_scalar", a, [b](Real x) { return x + b; }, [](Real, Real) { return Real(1); });
    case BinaryOp::sub: return unary("sub_scalar", a, [b](Real x) { return x - b; }, [](Real, Real) { return Real(1); });
    case BinaryOp::mul: return unary("mul_scalar", a, [b](Real x) { return x * b; }, [b](Real, Real) { return b; });
    case BinaryOp::div:
      return unary("div_scalar", a, [b](Real x) { return x / b; }, [b](Real, Real) { return 1 / b; });
  }
  throw ContractError("unknown elementwise kind");
}

Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }
Tensor operator+(const Tensor& a, Real b) { return elementwise(BinaryOp::add, a, b); }
Tensor operator-(const Tensor& a, Real b) { return elementwise(BinaryOp::sub, a, b); }
Tensor operator*(const Tensor& a, Real b) { return elementwise(BinaryOp::mul, a, b); }
Tensor operator/(const Tensor& a, Real b) { return elementwise(BinaryOp::div, a, b); }
Tensor operator+(Real a, const Tensor& b) { return elementwise(BinaryOp::add, b, a); }
Tensor operator*(Real a, const Tensor& b) { return elementwise(BinaryOp::mul, b, a); }
Tensor operator-(Real a, const Tensor& b) {
  return unary("rsub_scalar", b, [a](Real x) { return a - x; }, [](Real, Real) { return Real(-1); });
}
Tensor operator-(const Tensor& a) { return a * Real(-1); }

// ---------------------------------------------------------------- unary

Tensor elu(const Tensor& x) {
  return unary(
      "elu", x, [](Real v) { return v >= 0 ? v : std::expm1(v); },
      [](Real v, Real y) { return v >= 0 ? Real(1) : y + 1; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](Real v) {
        // Split by sign so exp never overflows.
        if (v >= 0) return 1 / (1 + std::exp(-v));
        const Real e = std::exp(v);
        return e / (1 + e);
      },
      [](Real, Real y) { return y * (1 - y); });
}

Tensor activation(Activation kind, const Tensor& x) {
  switch (kind) {
    case Activation::elu: return elu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::identity:
      return unary("identity", x, [](Real v) { return v; }, [](Real, Real) { return Real(1); });
  }
  throw ContractError("unknown activation");
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor log(const Tensor& x) {
  if (std::any_of(x.values().begin(), x.values().end(), [](Real v) { return !(v > 0); }))
    throw DomainError("log: argument contains a non-positive value");
  return unary("log", x, [](Real v) { return std::log(v); }, [](Real v, Real) { return 1 / v; });
}

Tensor sqrt(const Tensor& x) {
  if (std::any_of(x.values().begin(), x.values().end(), [](Real v) { return v < 0; }))
    throw DomainError("sqrt: argument contains a negative value");
  return unary(
      "sqrt", x, [](Real v) { return std::sqrt(v); }, [](Real, Real y) { return y > 0 ? 1 / (2 * y) : Real(0); });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0)); });
}

Tensor square(const Tensor& x) {
  return unary("square", x, [](Real v) { return v * v; }, [](Real v, Real) { return 2 * v; });
}

Tensor sin(const Tensor& x) {
  return unary("sin", x, [](Real v) { return std::sin(v); }, [](Real v, Real) { return std::cos(v); });
}

Tensor cos(const Tensor& x) {
  return unary("cos", x, [](Real v) { return std::cos(v); }, [](Real v, Real) { return -std::sin(v); });
}

Tensor clamp(const Tensor& x, Real lo, Real hi) {
  return unary(
      "clamp", x, [lo, hi](Real v) { return std::clamp(v, lo, hi); },
      [lo, hi](Real v, Real) { return (v > lo && v < hi) ? Real(1) : Real(0); });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("minimum: shape mismatch");
  std::vector<Real> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(a.values()[i], b.values()[i]);
  return make_result("minimum", a.shape(), std::move(out), {a, b}, [](Node& node) {
    const auto& av = node.inputs[0]->data;
    const auto& bv = node.inputs[1]->data;
    const auto go = node.grad_out();
    auto ga = node.grad_in(0);
    auto gb = node.grad_in(1);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (av[i] <= bv[i]) {
        if (!ga.empty()) ga[i] += go[i];
      } else if (!gb.empty()) {
        gb[i] += go[i];
      }
    }
  });
}

// ---------------------------------------------------------------- reductions and views

Tensor reduce(Reduction kind, const Tensor& x, std::vector<int> axes, bool keepdim) {
  const auto rank = static_cast<int>(x.rank());
  if (axes.empty()) {
    axes.resize(static_cast<std::size_t>(rank));
    std::iota(axes.begin(), axes.end(), 0);
  }
  std::vector<bool> reduced(static_cast<std::size_t>(rank), false);
  for (int a : axes) {
    if (a < 0) a += rank;
    if (a < 0 || a >= rank) throw DimensionError("reduce: axis out of range");
    reduced[static_cast<std::size_t>(a)] = true;
  }
  Shape kept_shape(x.shape());
  std::int64_t count = 1;
  for (int d = 0; d < rank; ++d)
    if (reduced[static_cast<std::size_t>(d)]) {
      count *= x.shape()[static_cast<std::size_t>(d)];
      kept_shape[static_cast<std::size_t>(d)] = 1;
    }
  if (count == 0) throw DomainError("reduce: empty axis extent");

  auto index = std::make_shared<std::vector<std::int64_t>>(broadcast_index(x.shape(), kept_shape));
  std::vector<Real> out(static_cast<std::size_t>(shape_numel(kept_shape)), 0);
  const auto xv = x.values();
  for (std::size_t k = 0; k < xv.size(); ++k) out[static_cast<std::size_t>((*index)[k])] += xv[k];
  const Real scale = kind == Reduction::mean ? Real(1) / static_cast<Real>(count) : Real(1);
  if (kind == Reduction::mean)
    for (auto& v : out) v *= scale;

  Shape out_shape;
  if (keepdim) {
    out_shape = kept_shape;
  } else {
    for (int d = 0; d < rank; ++d)
      if (!reduced[static_cast<std::size_t>(d)]) out_shape.push_back(x.shape()[static_cast<std::size_t>(d)]);
    if (out_shape.empty()) out_shape = {1};
  }
  return make_result(kind == Reduction::mean ? "mean" : "sum", out_shape, std::move(out), {x},
                     [index, scale](Node& node) {
                       auto gx = node.grad_in(0);
                       if (gx.empty()) return;
                       const auto go = node.grad_out();
                       for (std::size_t k = 0; k < gx.size(); ++k)
                         gx[k] += go[static_cast<std::size_t>((*index)[k])] * scale;
                     });
}

Tensor sum(const Tensor& x) { return reduce(Reduction::sum, x); }
Tensor mean(const Tensor& x) { return reduce(Reduction::mean, x); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: " + shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  return make_result("reshape", std::move(shape), values_of(x), {x}, [](Node& node) {
    auto gx = node.grad_in(0);
    if (gx.empty()) return;
    const auto go = node.grad_out();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
  });
}

namespace {

// (outer, extent, inner) decomposition around one axis.
struct AxisSplit {
  std::int64_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit sp;
  for (int d = 0; d < static_cast<int>(s.size()); ++d) {
    if (d < axis) sp.outer *= s[static_cast<std::size_t>(d)];
    else if (d == axis) sp.extent = s[static_cast<std::size_t>(d)];
    else sp.inner *= s[static_cast<std::size_t>(d)];
  }
  return sp;
}

int normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw DimensionError("axis out of range");
  return axis;
}

}  // namespace

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length) {
  axis = normalize_axis(axis, x.rank());
  const auto sp = split_at(x.shape(), axis);
  if (start < 0 || length <= 0 || start + length > sp.extent)
    throw DimensionError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") outside axis of extent " + std::to_string(sp.extent));
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = length;
  std::vector<Real> out(static_cast<std::size_t>(sp.outer * length * sp.inner));
  const auto xv = x.values();
  for (std::int64_t o = 0; o < sp.outer; ++o)
    std::copy_n(xv.begin() + (o * sp.extent + start) * sp.inner, length * sp.inner,
                out.begin() + o * length * sp.inner);
  return make_result("slice", out_shape, std::move(out), {x}, [sp, start, length](Node& node) {
    auto gx = node.grad_in(0);
    if (gx.empty()) return;
    const auto go = node.grad_out();
    for (std::int64_t o = 0; o < sp.outer; ++o)
      for (std::int64_t i = 0; i < length * sp.inner; ++i)
        gx[static_cast<std::size_t>((o * sp.extent + start) * sp.inner + i)] +=
            go[static_cast<std::size_t>(o * length * sp.inner + i)];
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  axis = normalize_axis(axis, parts.front().rank());
  Shape out_shape = parts.front().shape();
  std::int64_t total = 0;
  std::vector<std::int64_t> extents;
  for (const auto& p : parts) {
    if (p.rank() != out_shape.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t d = 0; d < out_shape.size(); ++d)
      if (static_cast<int>(d) != axis && p.shape()[d] != out_shape[d])
        throw DimensionError("concat: shape mismatch " + shape_to_string(p.shape()) + " vs " +
                             shape_to_string(out_shape));
    extents.push_back(p.shape()[static_cast<std::size_t>(axis)]);
    total += extents.back();
  }
  out_shape[static_cast<std::size_t>(axis)] = total;
  const auto sp = split_at(out_shape, axis);
  std::vector<Real> out(static_cast<std::size_t>(shape_numel(out_shape)));
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::int64_t o = 0; o < sp.outer; ++o)
      std::copy_n(pv.begin() + o * extents[k] * sp.inner, extents[k] * sp.inner,
                  out.begin() + (o * total + offset) * sp.inner);
    offset += extents[k];
  }
  return make_result("concat", out_shape, std::move(out), parts, [sp, extents, total](Node& node) {
    const auto go = node.grad_out();
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < extents.size(); ++k) {
      auto gk = node.grad_in(k);
      if (!gk.empty())
        for (std::int64_t o = 0; o < sp.outer; ++o)
          for (std::int64_t i = 0; i < extents[k] * sp.inner; ++i)
            gk[static_cast<std::size_t>(o * extents[k] * sp.inner + i)] +=
                go[static_cast<std::size_t>((o * total + offset) * sp.inner + i)];
      offset += extents[k];
    }
  });
}

// ---------------------------------------------------------------- spatial ops

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::int64_t stride,
              std::int64_t padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
  kernels::ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_channels = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.padding = padding;
  if (weight.dim(1) != g.in_channels)
    throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " input channels, input has " +
                         std::to_string(g.in_channels));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels))
    throw DimensionError("conv2d: bias shape " + shape_to_string(bias.shape()));
  const auto span_h = g.in_h + 2 * padding - g.kernel_h;
  const auto span_w = g.in_w + 2 * padding - g.kernel_w;
  if (span_h < 0 || span_w < 0) throw DimensionError("conv2d: kernel larger than padded input");
  if (span_h % stride != 0 || span_w % stride != 0)
    throw ConfigError("conv2d: output size is not integral for input " + shape_to_string(input.shape()) +
                      ", kernel " + shape_to_string(weight.shape()) + ", stride " + std::to_string(stride) +
                      ", padding " + std::to_string(padding));
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;

  std::vector<Real> out(static_cast<std::size_t>(g.batch * g.out_channels * g.out_h * g.out_w));
  kernels::parallel::conv2d_forward(g, input.values(), weight.values(),
                                    bias.defined() ? bias.values() : std::span<const Real>{}, out);
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result("conv2d", {g.batch, g.out_channels, g.out_h, g.out_w}, std::move(out), inputs,
                     [g](Node& node) {
                       const bool has_bias = node.inputs.size() == 3;
                       kernels::parallel::conv2d_backward(g, node.inputs[0]->data, node.inputs[1]->data,
                                                          node.grad_out(), node.grad_in(0), node.grad_in(1),
                                                          has_bias ? node.grad_in(2) : std::span<Real>{});
                     });
}

Tensor bilinear_sample(const Tensor& input, const Tensor& grid) {
  require_rank(input, 4, "bilinear_sample input");
  if (grid.rank() != 4 || grid.dim(3) != 2 || grid.dim(0) != input.dim(0))
    throw DimensionError("bilinear_sample: grid must be [N,H',W',2] matching input batch, got " +
                         shape_to_string(grid.shape()));
  kernels::SampleGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), grid.dim(1), grid.dim(2)};
  std::vector<Real> out(static_cast<std::size_t>(g.batch * g.channels * g.out_h * g.out_w));
  kernels::parallel::bilinear_forward(g, input.values(), grid.values(), out);
  return make_result("bilinear_sample", {g.batch, g.channels, g.out_h, g.out_w}, std::move(out), {input, grid},
                     [g](Node& node) {
                       kernels::parallel::bilinear_backward(g, node.inputs[0]->data, node.inputs[1]->data,
                                                            node.grad_out(), node.grad_in(0), node.grad_in(1));
                     });
}

Tensor cumsum_from_bottom(const Tensor& input) {
  require_rank(input, 4, "cumsum_from_bottom");
  kernels::PlaneGeometry g{input.dim(0) * input.dim(1), input.dim(2), input.dim(3)};
  std::vector<Real> out(input.values().size());
  kernels::parallel::cumsum_from_bottom(g, input.values(), out);
  return make_result("cumsum_from_bottom", input.shape(), std::move(out), {input}, [g](Node& node) {
    auto gx = node.grad_in(0);
    if (gx.empty()) return;
    // The transpose of a bottom-up prefix sum is a top-down prefix sum.
    std::vector<Real> tmp(gx.size());
    kernels::parallel::cumsum_from_top(g, node.grad_out(), tmp);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += tmp[i];
  });
}

Tensor upsample_nearest2x(const Tensor& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const auto planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<Real> out(static_cast<std::size_t>(planes * 4 * h * w));
  const auto xv = x.values();
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t y = 0; y < 2 * h; ++y)
      for (std::int64_t c = 0; c < 2 * w; ++c)
        out[static_cast<std::size_t>((p * 2 * h + y) * 2 * w + c)] =
            xv[static_cast<std::size_t>((p * h + y / 2) * w + c / 2)];
  return make_result("upsample_nearest2x", {x.dim(0), x.dim(1), 2 * h, 2 * w}, std::move(out), {x},
                     [planes, h, w](Node& node) {
                       auto gx = node.grad_in(0);
                       if (gx.empty()) return;
                       const auto go = node.grad_out();
                       for (std::int64_t p = 0; p < planes; ++p)
                         for (std::int64_t y = 0; y < 2 * h; ++y)
                           for (std::int64_t c = 0; c < 2 * w; ++c)
                             gx[static_cast<std::size_t>((p * h + y / 2) * w + c / 2)] +=
                                 go[static_cast<std::size_t>((p * 2 * h + y) * 2 * w + c)];
                     });
}

Tensor avg_pool2d(const Tensor& x, std::int64_t kernel, std::int64_t stride) {
  require_rank(x, 4, "avg_pool2d");
  if (kernel < 1 || stride < 1) throw ConfigError("avg_pool2d: kernel and stride must be >= 1");
  const auto planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < kernel || w < kernel) throw DimensionError("avg_pool2d: window larger than input");
  if ((h - kernel) % stride != 0 || (w - kernel) % stride != 0)
    throw ConfigError("avg_pool2d: output size is not integral");
  const auto oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  const Real scale = Real(1) / static_cast<Real>(kernel * kernel);
  std::vector<Real> out(static_cast<std::size_t>(planes * oh * ow));
  const auto xv = x.values();
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        Real acc = 0;
        for (std::int64_t ky = 0; ky < kernel; ++ky)
          for (std::int64_t kx = 0; kx < kernel; ++kx)
            acc += xv[static_cast<std::size_t>((p * h + oy * stride + ky) * w + ox * stride + kx)];
        out[static_cast<std::size_t>((p * oh + oy) * ow + ox)] = acc * scale;
      }
  return make_result("avg_pool2d", {x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                     [=](Node& node) {
                       auto gx = node.grad_in(0);
                       if (gx.empty()) return;
                       const auto go = node.grad_out();
                       for (std::int64_t p = 0; p < planes; ++p)
                         for (std::int64_t oy = 0; oy < oh; ++oy)
                           for (std::int64_t ox = 0; ox < ow; ++ox) {
                             const Real g = go[static_cast<std::size_t>((p * oh + oy) * ow + ox)] * scale;
                             for (std::int64_t ky = 0; ky < kernel; ++ky)
                               for (std::int64_t kx = 0; kx < kernel; ++kx)
                                 gx[static_cast<std::size_t>((p * h + oy * stride + ky) * w + ox * stride + kx)] += g;
                           }
                     });
}

Tensor pad_reflect(const Tensor& x, std::int64_t pad) {
  require_rank(x, 4, "pad_reflect");
  const auto planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (pad < 0 || pad >= h || pad >= w) throw DimensionError("pad_reflect: pad must be smaller than H and W");
  const auto ph = h + 2 * pad, pw = w + 2 * pad;
  auto reflect = [](std::int64_t i, std::int64_t n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
  };
  auto index = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(planes * ph * pw));
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t y = 0; y < ph; ++y)
      for (std::int64_t c = 0; c < pw; ++c)
        (*index)[static_cast<std::size_t>((p * ph + y) * pw + c)] =
            (p * h + reflect(y - pad, h)) * w + reflect(c - pad, w);
  std::vector<Real> out(index->size());
  const auto xv = x.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = xv[static_cast<std::size_t>((*index)[k])];
  return make_result("pad_reflect", {x.dim(0), x.dim(1), ph, pw}, std::move(out), {x}, [index](Node& node) {
    auto gx = node.grad_in(0);
    if (gx.empty()) return;
    const auto go = node.grad_out();
    for (std::size_t k = 0; k < go.size(); ++k) gx[static_cast<std::size_t>((*index)[k])] += go[k];
  });
}

Tensor identity_grid(std::int64_t batch, std::int64_t h, std::int64_t w) {
  std::vector<Real> g(static_cast<std::size_t>(batch * h * w * 2));
  auto norm = [](std::int64_t i, std::int64_t n) {
    return n > 1 ? Real(2) * static_cast<Real>(i) / static_cast<Real>(n - 1) - 1 : Real(-1);
  };
  for (std::int64_t n = 0; n < batch; ++n)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const auto k = static_cast<std::size_t>(((n * h + y) * w + x) * 2);
        g[k] = norm(x, w);
        g[k + 1] = norm(y, h);
      }
  return Tensor::from_values({batch, h, w, 2}, std::move(g));
}

Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  require_rank(x, 4, "resize_bilinear");
  if (x.dim(2) == out_h && x.dim(3) == out_w) return x;
  return bilinear_sample(x, identity_grid(x.dim(0), out_h, out_w));
}

}  // namespace daccn
