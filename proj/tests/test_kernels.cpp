#include <gtest/gtest.h>

#include <random>

#include "daccn/kernels.hpp"
#include "daccn/ops.hpp"
#include "test_util.hpp"

using namespace daccn;
using daccn::testing::random_tensor;
using daccn::testing::to_vector;

namespace {

std::vector<Real> random_values(std::size_t n, std::mt19937_64& rng, Real lo = -1, Real hi = 1) {
  std::uniform_real_distribution<Real> dist(lo, hi);
  std::vector<Real> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

kernels::ConvGeometry random_conv(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(1, 4), size(3, 11), k(0, 2);
  kernels::ConvGeometry g{};
  g.batch = small(rng);
  g.in_channels = small(rng);
  g.out_channels = small(rng);
  g.kernel_h = g.kernel_w = 2 * k(rng) + 1;
  g.stride = std::uniform_int_distribution<int>(1, 2)(rng);
  g.padding = std::uniform_int_distribution<int>(0, static_cast<int>(g.kernel_h / 2))(rng);
  // Pick output sizes, then derive an input size that divides exactly.
  const auto oh = size(rng) / 2 + 1, ow = size(rng) / 2 + 1;
  g.in_h = (oh - 1) * g.stride + g.kernel_h - 2 * g.padding;
  g.in_w = (ow - 1) * g.stride + g.kernel_w - 2 * g.padding;
  g.out_h = oh;
  g.out_w = ow;
  return g;
}

}  // namespace

TEST(Kernels, Conv2dParallelMatchesSerial) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_conv(rng);
    const auto in = random_values(static_cast<std::size_t>(g.batch * g.in_channels * g.in_h * g.in_w), rng);
    const auto w = random_values(static_cast<std::size_t>(g.out_channels * g.in_channels * g.kernel_h * g.kernel_w), rng);
    const auto b = random_values(static_cast<std::size_t>(g.out_channels), rng);
    const auto out_n = static_cast<std::size_t>(g.batch * g.out_channels * g.out_h * g.out_w);
    std::vector<Real> ref(out_n), par(out_n);
    kernels::serial::conv2d_forward(g, in, w, b, ref);
    kernels::parallel::conv2d_forward(g, in, w, b, par);
    for (std::size_t i = 0; i < out_n; ++i) ASSERT_NEAR(ref[i], par[i], 1e-12);

    const auto go = random_values(out_n, rng);
    std::vector<Real> gi_ref(in.size()), gw_ref(w.size()), gb_ref(b.size());
    std::vector<Real> gi_par(in.size()), gw_par(w.size()), gb_par(b.size());
    kernels::serial::conv2d_backward(g, in, w, go, gi_ref, gw_ref, gb_ref);
    kernels::parallel::conv2d_backward(g, in, w, go, gi_par, gw_par, gb_par);
    for (std::size_t i = 0; i < in.size(); ++i) ASSERT_NEAR(gi_ref[i], gi_par[i], 1e-12);
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(gw_ref[i], gw_par[i], 1e-12);
    for (std::size_t i = 0; i < b.size(); ++i) ASSERT_NEAR(gb_ref[i], gb_par[i], 1e-12);
  }
}

TEST(Kernels, BilinearParallelMatchesSerialExactly) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> d(1, 6);
    kernels::SampleGeometry g{d(rng), d(rng), d(rng) + 1, d(rng) + 1, d(rng), d(rng)};
    const auto in = random_values(static_cast<std::size_t>(g.batch * g.channels * g.in_h * g.in_w), rng);
    const auto grid = random_values(static_cast<std::size_t>(g.batch * g.out_h * g.out_w * 2), rng, -1.3, 1.3);
    const auto out_n = static_cast<std::size_t>(g.batch * g.channels * g.out_h * g.out_w);
    std::vector<Real> ref(out_n), par(out_n);
    kernels::serial::bilinear_forward(g, in, grid, ref);
    kernels::parallel::bilinear_forward(g, in, grid, par);
    ASSERT_EQ(ref, par);
    const auto go = random_values(out_n, rng);
    std::vector<Real> gi_ref(in.size()), gg_ref(grid.size()), gi_par(in.size()), gg_par(grid.size());
    kernels::serial::bilinear_backward(g, in, grid, go, gi_ref, gg_ref);
    kernels::parallel::bilinear_backward(g, in, grid, go, gi_par, gg_par);
    ASSERT_EQ(gi_ref, gi_par);
    ASSERT_EQ(gg_ref, gg_par);
  }
}

TEST(Kernels, CumsumParallelMatchesSerialExactly) {
  std::mt19937_64 rng(23);
  kernels::PlaneGeometry g{6, 9, 7};
  const auto in = random_values(6 * 9 * 7, rng);
  std::vector<Real> ref(in.size()), par(in.size());
  kernels::serial::cumsum_from_bottom(g, in, ref);
  kernels::parallel::cumsum_from_bottom(g, in, par);
  EXPECT_EQ(ref, par);
  kernels::serial::cumsum_from_top(g, in, ref);
  kernels::parallel::cumsum_from_top(g, in, par);
  EXPECT_EQ(ref, par);
}

TEST(Kernels, CumsumBackwardIsTransposeOfForward) {
  // <A x, y> == <x, A^T y> with A = bottom-up prefix sum, A^T = top-down prefix sum.
  std::mt19937_64 rng(24);
  kernels::PlaneGeometry g{3, 8, 5};
  const auto x = random_values(120, rng), y = random_values(120, rng);
  std::vector<Real> ax(120), aty(120);
  kernels::parallel::cumsum_from_bottom(g, x, ax);
  kernels::parallel::cumsum_from_top(g, y, aty);
  Real lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < 120; ++i) {
    lhs += ax[i] * y[i];
    rhs += x[i] * aty[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Kernels, ParallelResultsIndependentOfThreadCount) {
  std::mt19937_64 rng(25);
  auto in = random_tensor({2, 8, 24, 20}, rng);
  auto w = random_tensor({8, 8, 3, 3}, rng);
  auto b = random_tensor({8}, rng);
  auto run = [&](int threads) {
    kernels::set_num_threads(threads);
    auto x = in.clone();
    auto wt = w.clone();
    x.set_requires_grad(true);
    wt.set_requires_grad(true);
    auto out = cumsum_from_bottom(conv2d(x, wt, b, 1, 1));
    backward(daccn::testing::probe(out));
    return std::make_tuple(to_vector(out), std::vector<Real>(x.grad().begin(), x.grad().end()),
                           std::vector<Real>(wt.grad().begin(), wt.grad().end()));
  };
  const auto one = run(1);
  const auto four = run(4);
  kernels::set_num_threads(1);
  EXPECT_EQ(one, four);
}
