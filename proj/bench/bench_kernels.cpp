// Serial reference kernels vs OpenMP kernels on model-sized workloads.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "daccn/kernels.hpp"

using namespace daccn;
using namespace daccn::kernels;

namespace {

std::vector<Real> random_values(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> dist(-1, 1);
  std::vector<Real> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = dist(rng);
  return v;
}

// 24 -> 24 channels, 3x3, at the stride-4 resolution of a 96x160 input.
ConvGeometry conv_geometry() { return {2, 24, 24, 40, 24, 3, 3, 1, 1, 24, 40}; }

template <bool Parallel>
void BM_Conv2dForward(benchmark::State& state) {
  const auto g = conv_geometry();
  const auto in = random_values(g.batch * g.in_channels * g.in_h * g.in_w, 1);
  const auto w = random_values(g.out_channels * g.in_channels * 9, 2);
  const auto b = random_values(g.out_channels, 3);
  std::vector<Real> out(static_cast<std::size_t>(g.batch * g.out_channels * g.out_h * g.out_w));
  for (auto _ : state) {
    if constexpr (Parallel)
      parallel::conv2d_forward(g, in, w, b, out);
    else
      serial::conv2d_forward(g, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Conv2dBackward(benchmark::State& state) {
  const auto g = conv_geometry();
  const auto in = random_values(g.batch * g.in_channels * g.in_h * g.in_w, 1);
  const auto w = random_values(g.out_channels * g.in_channels * 9, 2);
  const auto go = random_values(g.batch * g.out_channels * g.out_h * g.out_w, 3);
  std::vector<Real> gi(in.size()), gw(w.size()), gb(static_cast<std::size_t>(g.out_channels));
  for (auto _ : state) {
    if constexpr (Parallel)
      parallel::conv2d_backward(g, in, w, go, gi, gw, gb);
    else
      serial::conv2d_backward(g, in, w, go, gi, gw, gb);
    benchmark::DoNotOptimize(gi.data());
  }
}

template <bool Parallel>
void BM_BilinearForward(benchmark::State& state) {
  const SampleGeometry g{2, 3, 96, 160, 96, 160};
  const auto in = random_values(g.batch * g.channels * g.in_h * g.in_w, 4);
  const auto grid = random_values(g.batch * g.out_h * g.out_w * 2, 5);
  std::vector<Real> out(static_cast<std::size_t>(g.batch * g.channels * g.out_h * g.out_w));
  for (auto _ : state) {
    if constexpr (Parallel)
      parallel::bilinear_forward(g, in, grid, out);
    else
      serial::bilinear_forward(g, in, grid, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_CumsumFromBottom(benchmark::State& state) {
  const PlaneGeometry g{2 * 16, 48, 80};
  const auto in = random_values(g.planes * g.h * g.w, 6);
  std::vector<Real> out(in.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      parallel::cumsum_from_bottom(g, in, out);
    else
      serial::cumsum_from_bottom(g, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Conv2dForward<false>)->Name("conv2d_forward/serial");
BENCHMARK(BM_Conv2dForward<true>)->Name("conv2d_forward/parallel");
BENCHMARK(BM_Conv2dBackward<false>)->Name("conv2d_backward/serial");
BENCHMARK(BM_Conv2dBackward<true>)->Name("conv2d_backward/parallel");
BENCHMARK(BM_BilinearForward<false>)->Name("bilinear_forward/serial");
BENCHMARK(BM_BilinearForward<true>)->Name("bilinear_forward/parallel");
BENCHMARK(BM_CumsumFromBottom<false>)->Name("cumsum_from_bottom/serial");
BENCHMARK(BM_CumsumFromBottom<true>)->Name("cumsum_from_bottom/parallel");

BENCHMARK_MAIN();
