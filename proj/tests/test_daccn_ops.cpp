#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "daccn/autodiff.hpp"
#include "daccn/daccn_ops.hpp"
#include "daccn/gradcheck.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace daccn;
using daccn::testing::probe;
using daccn::testing::random_tensor;
using daccn::testing::to_vector;
using daccn::testing::brute_force_cc;
using daccn::testing::elu_ref;

namespace {

DirectionScales fixed_scales(Real sx, Real sy) {
  return {Tensor::from_values({1}, {std::log(sx)}), Tensor::from_values({1}, {std::log(sy)})};
}

ConvBlock random_block(std::int64_t c, std::mt19937_64& rng) {
  return {random_tensor({c, c, 3, 3}, rng, -0.5, 0.5), random_tensor({c}, rng, -0.2, 0.2),
          random_tensor({c, c, 3, 3}, rng, -0.5, 0.5), random_tensor({c}, rng, -0.2, 0.2)};
}

}  // namespace

TEST(DirectionScales, UnitInitIsExactlyOne) {
  const auto s = DirectionScales::unit();
  EXPECT_EQ(s.sx(), 1.0);
  EXPECT_EQ(s.sy(), 1.0);
  EXPECT_TRUE(s.log_sx.requires_grad());
}

TEST(DirectionScales, ClampedToRange) {
  EXPECT_EQ(fixed_scales(10, 0.01).sx(), kMaxDirectionScale);
  EXPECT_EQ(fixed_scales(10, 0.01).sy(), kMinDirectionScale);
  EXPECT_GT(fixed_scales(1e-30, 1).sx(), 0);
}

TEST(AffineGrid, UnitScalesGiveIdentityGrid) {
  const auto g = affine_grid(DirectionScales::unit(), 4, 6, false);
  EXPECT_EQ(g.out_h, 4);
  EXPECT_EQ(g.out_w, 6);
  const auto got = to_vector(g.grid), want = to_vector(identity_grid(1, 4, 6));
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-15);
}

TEST(AffineGrid, OutputExtents) {
  const auto tall = affine_grid(fixed_scales(1, 2), 4, 6, false);
  EXPECT_EQ(tall.out_h, 8);
  EXPECT_EQ(tall.out_w, 6);
  const auto narrow = affine_grid(fixed_scales(0.5, 1), 4, 6, false);
  EXPECT_EQ(narrow.out_w, 3);
  const auto back = affine_grid(fixed_scales(0.5, 1), 4, 6, true);
  EXPECT_EQ(back.out_h, 4);
  EXPECT_EQ(back.out_w, 6);
  EXPECT_EQ(scaled_extent(0.25, 2), 1);
}

TEST(AffineGrid, ForwardGridReadsScaledCoordinates) {
  // Output pixel (i, j) reads input (i / s_y, j / s_x); normalized x = 2 x / (W - 1) - 1.
  const auto g = affine_grid(fixed_scales(2, 1), 3, 5, false);
  ASSERT_EQ(g.out_w, 10);
  const Real x_of_j3 = g.grid.at({0, 1, 3, 0});
  EXPECT_NEAR(x_of_j3, 2 * (3 / 2.0) / 4 - 1, 1e-12);
  EXPECT_NEAR(g.grid.at({0, 2, 3, 1}), 1.0, 1e-12);
}

TEST(DirectionAwareBlock, UnitScalesBitIdenticalToBareBlock) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({2, 3, 8, 10}, rng);
  const ConvBlock block = random_block(3, rng);
  EXPECT_EQ(to_vector(direction_aware_block(x, DirectionScales::unit(), block)), to_vector(block.forward(x)));
}

TEST(DirectionAwareBlock, OutputShapeMatchesInputForAnyScale) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({1, 2, 6, 9}, rng);
  const ConvBlock block = random_block(2, rng);
  for (auto [sx, sy] : {std::pair{0.5, 2.0}, {1.7, 0.6}, {4.0, 0.25}})
    EXPECT_EQ(direction_aware_block(x, fixed_scales(sx, sy), block).shape(), x.shape());
}

TEST(DirectionAwareBlock, ConstantInputGivesConstantOutputPerChannel) {
  std::mt19937_64 rng(5);
  const Tensor x = Tensor::full({1, 2, 8, 8}, 0.3);
  ConvBlock block = random_block(2, rng);
  // Zero borders of a zero-padded conv break constancy; a centre-only kernel keeps it.
  for (Tensor* w : {&block.w1, &block.w2}) {
    auto v = w->mutable_values();
    for (std::size_t k = 0; k < v.size(); ++k)
      if (k % 9 != 4) v[k] = 0;
  }
  const Tensor y = direction_aware_block(x, fixed_scales(1.6, 0.7), block);
  for (std::int64_t c = 0; c < 2; ++c)
    for (std::int64_t i = 0; i < 8; ++i)
      for (std::int64_t j = 0; j < 8; ++j) EXPECT_NEAR(y.at({0, c, i, j}), y.at({0, c, 0, 0}), 1e-12);
}

TEST(DirectionAwareBlock, LogScaleGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({1, 2, 8, 8}, rng);
  const ConvBlock block = random_block(2, rng);
  const auto fn = [&](const std::vector<Tensor>& in) { return probe(direction_aware_block(x, {in[0], in[1]}, block)); };
  const auto r = finite_diff_check(fn, {Tensor::from_values({1}, {0.2}), Tensor::from_values({1}, {0.35})}, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-4);

  const Tensor lx = Tensor::from_values({1}, {0.2}, true), ly = Tensor::from_values({1}, {0.35}, true);
  backward(probe(direction_aware_block(x, {lx, ly}, block)));
  EXPECT_NE(ly.grad()[0], 0.0);
}

TEST(DirectionAwareBlock, BlockWeightGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  const ConvBlock b = random_block(2, rng);
  const auto fn = [](const std::vector<Tensor>& in) {
    return probe(direction_aware_block(in[0], fixed_scales(1.3, 0.8), {in[1], in[2], in[3], in[4]}));
  };
  const auto r = finite_diff_check(fn, {random_tensor({1, 2, 5, 6}, rng), b.w1, b.b1, b.w2, b.b2}, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(CumulativeConvolution, MatchesBruteForceOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> nd(1, 2), cd(1, 3), sd(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape s{nd(rng), cd(rng), sd(rng), sd(rng)};
    const auto f = cd(rng);
    const Tensor x = random_tensor(s, rng);
    const Tensor w = random_tensor({f, s[1], 3, 3}, rng);
    const Tensor b = random_tensor({f}, rng);
    const auto got = to_vector(cumulative_convolution(x, {w, b, Activation::elu}));
    const auto want = brute_force_cc(x, w, b);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) ASSERT_NEAR(got[k], want[k], 1e-12) << "trial " << trial;
  }
}

TEST(CumulativeConvolution, ConstantConvOutputIsFixedPoint) {
  // Centre-tap identity on a constant map gives conv output c everywhere.
  Tensor w = Tensor::zeros({1, 1, 3, 3});
  w.mutable_values()[4] = 1;
  const Tensor y = cumulative_convolution(Tensor::full({1, 1, 5, 4}, -0.4), {w, Tensor::zeros({1}), Activation::elu});
  for (Real v : y.values()) EXPECT_NEAR(v, elu_ref(-0.4), 1e-15);
}

TEST(CumulativeConvolution, BottomRowIsActivatedConv) {
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor({1, 2, 6, 5}, rng);
  const Tensor w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
  const Tensor y = cumulative_convolution(x, {w, b, Activation::elu});
  const Tensor c = conv2d(x, w, b, 1, 1);
  for (std::int64_t f = 0; f < 3; ++f)
    for (std::int64_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(y.at({0, f, 5, j}), elu_ref(c.at({0, f, 5, j})));
}

TEST(CumulativeConvolution, RowPDependsOnlyOnRowsFromPMinusOne) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor({1, 2, 8, 6}, rng);
  const CumulativeConvParams params{random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng), Activation::elu};
  const Tensor y = cumulative_convolution(x, params);
  const std::int64_t p = 5;
  Tensor x2 = x.clone();
  auto v = x2.mutable_values();
  for (std::int64_t c = 0; c < 2; ++c)
    for (std::int64_t i = 0; i < p - 1; ++i)
      for (std::int64_t j = 0; j < 6; ++j) v[static_cast<std::size_t>((c * 8 + i) * 6 + j)] += 3.0;
  const Tensor y2 = cumulative_convolution(x2, params);
  for (std::int64_t f = 0; f < 2; ++f)
    for (std::int64_t i = p; i < 8; ++i)
      for (std::int64_t j = 0; j < 6; ++j) EXPECT_EQ(y.at({0, f, i, j}), y2.at({0, f, i, j}));
  EXPECT_NE(y.at({0, 0, p - 2, 0}), y2.at({0, 0, p - 2, 0}));
}

TEST(CumulativeConvolution, ColumnShiftEquivariantInInterior) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor({1, 1, 5, 12}, rng);
  const CumulativeConvParams params{random_tensor({1, 1, 3, 3}, rng), random_tensor({1}, rng), Activation::elu};
  std::vector<Real> shifted(60);
  for (std::int64_t i = 0; i < 5; ++i)
    for (std::int64_t j = 0; j < 12; ++j) shifted[static_cast<std::size_t>(i * 12 + j)] = x.at({0, 0, i, (j + 11) % 12});
  const Tensor y = cumulative_convolution(x, params);
  const Tensor ys = cumulative_convolution(Tensor::from_values({1, 1, 5, 12}, shifted), params);
  for (std::int64_t i = 0; i < 5; ++i)
    for (std::int64_t j = 2; j < 11; ++j) EXPECT_NEAR(ys.at({0, 0, i, j}), y.at({0, 0, i, j - 1}), 1e-14);
}

TEST(CumulativeConvolution, FullOperatorGradientCheck) {
  std::mt19937_64 rng(12);
  const auto fn = [](const std::vector<Tensor>& in) {
    return probe(cumulative_convolution(in[0], {in[1], in[2], Activation::elu}));
  };
  const auto r = finite_diff_check(
      fn, {random_tensor({1, 2, 5, 6}, rng), random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng)}, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-5);
}
