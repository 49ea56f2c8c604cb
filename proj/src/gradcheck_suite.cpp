#include "daccn/gradcheck_suite.hpp"

#include <chrono>
#include <cstdio>

#include "daccn/autodiff.hpp"
#include "daccn/daccn_ops.hpp"
#include "daccn/geometry.hpp"
#include "daccn/losses.hpp"
#include "daccn/ops.hpp"
#include "daccn/rng.hpp"

namespace daccn {

namespace {

using Inputs = std::vector<Tensor>;

Tensor uniform(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  std::vector<Real> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor::from_values(std::move(shape), std::move(v));
}

// Weighted sum with fixed weights in [0.5, 1.5] so every output element matters.
Tensor probe(const Tensor& out) {
  Rng rng(4242);
  return sum(out * uniform(out.shape(), rng, 0.5, 1.5));
}

Tensor random_mask(Shape shape, Rng& rng, double keep) {
  std::vector<Real> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(0, 1) < keep ? 1 : 0;
  return Tensor::from_values(std::move(shape), std::move(v));
}

DirectionScales scales_from(const Tensor& lx, const Tensor& ly) { return {lx, ly}; }

const CameraIntrinsics kSmallK{8, 8, 4.5, 3.5};

PoseTensors small_pose() {
  return PoseTensors::from_transforms({RigidTransform::from_axis_angle({0.01, -0.02, 0.015}, {0.12, -0.03, 0.05})});
}

}  // namespace

Tensor faulty_square(const Tensor& x) {
  std::vector<Real> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= v;
  const auto xs = x.impl();
  return make_result("faulty_square", x.shape(), std::move(out), {x}, [xs](Node& node) {
    auto gi = node.grad_in(0);
    const auto go = node.grad_out();
    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += Real(2.2) * xs->data[k] * go[k];
  });
}

std::vector<GradCheckCase> gradcheck_cases(bool include_faulty) {
  Rng rng(20240611);
  std::vector<GradCheckCase> cases;
  const double exact = 1e-5, path = 1e-4;

  cases.push_back({"conv2d", exact,
                   [](const Inputs& in) { return probe(conv2d(in[0], in[1], in[2], 2, 1)); },
                   {uniform({2, 3, 7, 9}, rng), uniform({4, 3, 3, 3}, rng), uniform({4}, rng)}});
  {
    const Tensor grid = uniform({1, 4, 3, 2}, rng, -1.1, 1.1);
    cases.push_back({"bilinear_sample.values", exact,
                     [grid](const Inputs& in) { return probe(bilinear_sample(in[0], grid)); },
                     {uniform({1, 2, 5, 6}, rng)}});
  }
  cases.push_back({"bilinear_sample.grid", path,
                   [](const Inputs& in) { return probe(bilinear_sample(in[0], in[1])); },
                   {uniform({1, 2, 5, 6}, rng), uniform({1, 4, 3, 2}, rng, -0.95, 0.95)}});
  cases.push_back({"cumsum_from_bottom", exact, [](const Inputs& in) { return probe(cumsum_from_bottom(in[0])); },
                   {uniform({2, 2, 6, 5}, rng)}});
  cases.push_back({"elementwise", exact,
                   [](const Inputs& in) {
                     return probe((in[0] * in[1] - in[2]) / (in[1] + 3.0) + in[0] * 0.5 - (2.0 - in[2]));
                   },
                   {uniform({2, 3, 4}, rng), uniform({3, 1}, rng), uniform({4}, rng)}});
  cases.push_back({"activations", exact,
                   [](const Inputs& in) {
                     return probe(elu(in[0]) + sigmoid(in[0]) * exp(in[0]) + log(in[1]) + sqrt(in[1]) + abs(in[0]) +
                                  square(in[0]) + sin(in[0]) * cos(in[0]));
                   },
                   {uniform({3, 7}, rng), uniform({3, 7}, rng, 0.5, 2)}});
  cases.push_back({"reductions_and_views", exact,
                   [](const Inputs& in) {
                     const Tensor m = reduce(Reduction::mean, in[0], {1, 3}, true);
                     const Tensor c = concat({slice(in[0], 2, 1, 3), in[0]}, 2);
                     return probe(reshape(in[0] * m, {2, 60})) + probe(avg_pool2d(c, 2, 1)) +
                            probe(avg_pool2d(pad_reflect(in[0], 1), 3, 1)) +
                            probe(minimum(in[0], clamp(in[0] * 1.5, -0.7, 0.7)));
                   },
                   {uniform({2, 3, 4, 5}, rng)}});
  cases.push_back({"upsample_nearest2x", exact, [](const Inputs& in) { return probe(upsample_nearest2x(in[0])); },
                   {uniform({1, 2, 3, 4}, rng)}});
  cases.push_back({"direction_aware_block.weights", exact,
                   [](const Inputs& in) {
                     const auto lx = Tensor::from_values({1}, {0.3}), ly = Tensor::from_values({1}, {-0.25});
                     return probe(direction_aware_block(in[0], scales_from(lx, ly), {in[1], in[2], in[3], in[4]}));
                   },
                   {uniform({1, 2, 8, 8}, rng), uniform({2, 2, 3, 3}, rng), uniform({2}, rng),
                    uniform({2, 2, 3, 3}, rng), uniform({2}, rng)}});
  {
    const Tensor x = uniform({1, 2, 8, 8}, rng);
    const ConvBlock block{uniform({2, 2, 3, 3}, rng), uniform({2}, rng), uniform({2, 2, 3, 3}, rng), uniform({2}, rng)};
    cases.push_back({"direction_aware_block.log_scales", path,
                     [x, block](const Inputs& in) { return probe(direction_aware_block(x, scales_from(in[0], in[1]), block)); },
                     {Tensor::from_values({1}, {0.3}), Tensor::from_values({1}, {-0.25})}});
  }
  cases.push_back({"cumulative_convolution", exact,
                   [](const Inputs& in) {
                     return probe(cumulative_convolution(in[0], {in[1], in[2], Activation::elu}));
                   },
                   {uniform({2, 3, 6, 5}, rng), uniform({2, 3, 3, 3}, rng), uniform({2}, rng)}});
  cases.push_back({"ssim", exact, [](const Inputs& in) { return probe(ssim(in[0], in[1])); },
                   {uniform({1, 2, 6, 7}, rng, 0, 1), uniform({1, 2, 6, 7}, rng, 0, 1)}});
  {
    const Tensor m1 = random_mask({2, 1, 6, 7}, rng, 0.8), m2 = random_mask({2, 1, 6, 7}, rng, 0.8);
    cases.push_back({"photometric_loss", exact,
                     [m1, m2](const Inputs& in) {
                       LossConfig cfg;
                       const Tensor a = photometric_loss({{in[0], m1}, {in[1], m2}}, in[2], cfg);
                       cfg.min_over_sources = false;
                       return a + photometric_loss({{in[0], m1}, {in[1], m2}}, in[2], cfg);
                     },
                     {uniform({2, 3, 6, 7}, rng, 0, 1), uniform({2, 3, 6, 7}, rng, 0, 1),
                      uniform({2, 3, 6, 7}, rng, 0, 1)}});
  }
  cases.push_back({"smoothness_loss", exact, [](const Inputs& in) { return smoothness_loss(in[0], in[1]); },
                   {uniform({2, 1, 5, 6}, rng, 0.1, 0.9), uniform({2, 3, 5, 6}, rng, 0, 1)}});
  {
    const Tensor source = uniform({1, 3, 8, 10}, rng, 0, 1);
    cases.push_back({"warp_image.depth", path,
                     [source](const Inputs& in) {
                       const WarpResult w = warp_image(source, DepthMap{in[0]}, small_pose(), kSmallK);
                       return probe(w.image * w.valid_mask);
                     },
                     {uniform({1, 1, 8, 10}, rng, 2, 4)}});
    const Tensor depth = uniform({1, 1, 8, 10}, rng, 2, 4);
    cases.push_back({"warp_image.pose", path,
                     [source, depth](const Inputs& in) {
                       const WarpResult w = warp_image(source, DepthMap{depth}, pose_from_axis_angle(in[0], in[1]), kSmallK);
                       return probe(w.image * w.valid_mask);
                     },
                     {Tensor::from_values({1, 3}, {0.01, -0.02, 0.015}), Tensor::from_values({1, 3}, {0.12, -0.03, 0.05})}});
  }
  if (include_faulty)
    cases.push_back({"faulty_square (negative control)", exact, [](const Inputs& in) { return probe(faulty_square(in[0])); },
                     {uniform({3, 4}, rng)}});
  return cases;
}

std::vector<GradCheckRow> run_gradcheck(const std::vector<GradCheckCase>& cases) {
  std::vector<GradCheckRow> rows;
  for (const auto& c : cases) {
    std::vector<Tensor> inputs;
    for (const auto& t : c.inputs) inputs.push_back(t.clone());
    const auto start = std::chrono::steady_clock::now();
    const GradCheckResult r = finite_diff_check(c.fn, inputs, kGradCheckStep);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back({c.name, r.max_rel_error, c.tolerance, r.max_rel_error < c.tolerance, r.checked, seconds});
  }
  return rows;
}

std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-34s %12s %10s %8s %8s  %s\n", "op", "max_rel_err", "tolerance", "checked", "time_s",
                "result");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-34s %12.3e %10.1e %8zu %8.3f  %s\n", r.name.c_str(), r.max_rel_error, r.tolerance,
                  r.checked, r.seconds, r.passed ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

}  // namespace daccn
