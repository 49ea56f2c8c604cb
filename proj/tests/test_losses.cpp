#include <gtest/gtest.h>

#include <random>

#include "daccn/errors.hpp"
#include "daccn/gradcheck.hpp"
#include "daccn/losses.hpp"
#include "test_util.hpp"

using namespace daccn;
using daccn::testing::probe;
using daccn::testing::random_tensor;
using daccn::testing::to_vector;

namespace {

Tensor ones_mask(std::int64_t n, std::int64_t h, std::int64_t w) { return Tensor::full({n, 1, h, w}, 1); }

Tensor ramp_disp() { return Tensor::from_values({1, 1, 1, 4}, {1, 2, 3, 4}); }

Real scalar_of(const Tensor& t) { return t.item(); }

}  // namespace

TEST(Ssim, SelfSimilarityIsOne) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({2, 3, 7, 9}, rng, 0, 1);
  for (Real v : ssim(a, a).values()) EXPECT_NEAR(v, 1, 1e-12);
}

TEST(Ssim, Symmetric) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor({1, 3, 6, 6}, rng, 0, 1), b = random_tensor({1, 3, 6, 6}, rng, 0, 1);
  EXPECT_EQ(to_vector(ssim(a, b)), to_vector(ssim(b, a)));
}

TEST(Ssim, ConstantImagesClosedForm) {
  const Tensor s = ssim(Tensor::full({1, 1, 4, 5}, 0.2), Tensor::full({1, 1, 4, 5}, 0.8));
  const Real want = (2 * 0.16 + kSsimC1) / (0.04 + 0.64 + kSsimC1);
  EXPECT_NEAR(want, 0.4707, 1e-4);
  for (Real v : s.values()) EXPECT_NEAR(v, want, 1e-12);
}

TEST(Ssim, RangeAndShapeErrors) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({1, 2, 5, 5}, rng, 0, 1), b = random_tensor({1, 2, 5, 5}, rng, 0, 1);
  for (Real v : ssim(a, b).values()) {
    EXPECT_GE(v, -1);
    EXPECT_LE(v, 1);
  }
  EXPECT_THROW(ssim(a, random_tensor({1, 2, 5, 4}, rng, 0, 1)), DimensionError);
}

TEST(PhotometricLoss, ZeroForPerfectSynthesis) {
  std::mt19937_64 rng(4);
  const Tensor t = random_tensor({2, 3, 6, 8}, rng, 0, 1);
  EXPECT_NEAR(scalar_of(photometric_loss({{t, ones_mask(2, 6, 8)}}, t, {})), 0, 1e-15);
}

TEST(PhotometricLoss, AlphaZeroIsMaskedL1) {
  std::mt19937_64 rng(5);
  const Tensor t = random_tensor({1, 3, 4, 5}, rng, 0, 1), s = random_tensor({1, 3, 4, 5}, rng, 0, 1);
  std::vector<Real> m(20, 0);
  for (std::size_t k = 0; k < 20; k += 3) m[k] = 1;
  LossConfig cfg;
  cfg.alpha = 0;
  Real want = 0;
  int count = 0;
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t j = 0; j < 5; ++j) {
      if (m[static_cast<std::size_t>(i * 5 + j)] == 0) continue;
      ++count;
      for (std::int64_t c = 0; c < 3; ++c) want += std::abs(s.at({0, c, i, j}) - t.at({0, c, i, j})) / 3;
    }
  want /= count;
  EXPECT_NEAR(scalar_of(photometric_loss({{s, Tensor::from_values({1, 1, 4, 5}, m)}}, t, cfg)), want, 1e-14);
}

TEST(PhotometricLoss, MinimumOverSourcesPicksMatchingHalves) {
  std::mt19937_64 rng(6);
  const std::int64_t h = 6, w = 12;
  const Tensor target = random_tensor({1, 3, h, w}, rng, 0, 1);
  const Tensor noise = random_tensor({1, 3, h, w}, rng, 0, 1);
  std::vector<Real> a(to_vector(target)), b(to_vector(target));
  // Source A matches on the left half, B on the right; SSIM windows reach one column across.
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j) {
        const auto k = static_cast<std::size_t>((c * h + i) * w + j);
        if (j >= w / 2) a[k] = noise.values()[k];
        if (j < w / 2) b[k] = noise.values()[k];
      }
  // Restrict the mask to columns whose SSIM window stays inside one half.
  std::vector<Real> m(static_cast<std::size_t>(h * w), 1);
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t j : {w / 2 - 1, w / 2}) m[static_cast<std::size_t>(i * w + j)] = 0;
  const Tensor mask = Tensor::from_values({1, 1, h, w}, m);
  const std::vector<SynthesizedView> views{{Tensor::from_values({1, 3, h, w}, a), mask},
                                           {Tensor::from_values({1, 3, h, w}, b), mask}};
  LossConfig cfg;
  EXPECT_NEAR(scalar_of(photometric_loss(views, target, cfg)), 0, 1e-12);
  cfg.min_over_sources = false;
  EXPECT_GT(scalar_of(photometric_loss(views, target, cfg)), 0.05);
}

TEST(PhotometricLoss, MinimumNeverExceedsSingleSource) {
  std::mt19937_64 rng(7);
  const Tensor t = random_tensor({1, 3, 5, 7}, rng, 0, 1);
  const Tensor s1 = random_tensor({1, 3, 5, 7}, rng, 0, 1), s2 = random_tensor({1, 3, 5, 7}, rng, 0, 1);
  const Tensor m = ones_mask(1, 5, 7);
  const Real both = scalar_of(photometric_loss({{s1, m}, {s2, m}}, t, {}));
  EXPECT_LE(both, scalar_of(photometric_loss({{s1, m}}, t, {})));
  EXPECT_LE(both, scalar_of(photometric_loss({{s2, m}}, t, {})));
  EXPECT_GE(both, 0);
}

TEST(PhotometricLoss, EmptyMaskIsDegenerate) {
  std::mt19937_64 rng(8);
  const Tensor t = random_tensor({1, 3, 4, 4}, rng, 0, 1);
  EXPECT_THROW(photometric_loss({{t, Tensor::zeros({1, 1, 4, 4})}}, t, {}), DegenerateError);
}

TEST(SmoothnessLoss, ConstantDisparityIsZero) {
  std::mt19937_64 rng(9);
  const Tensor img = random_tensor({2, 3, 5, 6}, rng, 0, 1);
  EXPECT_EQ(scalar_of(smoothness_loss(Tensor::full({2, 1, 5, 6}, 0.37), img)), 0);
}

TEST(SmoothnessLoss, RampWithConstantImage) {
  // d* = disp / 2.5; each of the three steps contributes 1 / 2.5.
  const Real got = scalar_of(smoothness_loss(ramp_disp(), Tensor::full({1, 3, 1, 4}, 0.5)));
  EXPECT_NEAR(got, 1 / 2.5, 1e-15);
}

TEST(SmoothnessLoss, ImageEdgesDownweight) {
  const Real flat = scalar_of(smoothness_loss(ramp_disp(), Tensor::full({1, 3, 1, 4}, 0.5)));
  std::vector<Real> edge(12);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < 4; ++j) edge[c * 4 + j] = 0.3 * static_cast<Real>(j);
  EXPECT_LT(scalar_of(smoothness_loss(ramp_disp(), Tensor::from_values({1, 3, 1, 4}, edge))), flat);
}

TEST(SmoothnessLoss, InvariantToDisparityScale) {
  std::mt19937_64 rng(10);
  const Tensor d = random_tensor({2, 1, 6, 7}, rng, 0.05, 0.95), img = random_tensor({2, 3, 6, 7}, rng, 0, 1);
  const Real base = scalar_of(smoothness_loss(d, img));
  for (Real c : {0.01, 0.5, 3.0, 40.0}) EXPECT_NEAR(scalar_of(smoothness_loss(d * c, img)), base, 1e-9);
}

TEST(TotalLoss, Examples) {
  LossConfig one;
  one.num_scales = 1;
  one.lambda = 0;
  EXPECT_DOUBLE_EQ(scalar_of(total_loss({Tensor::scalar(0.7)}, {Tensor::scalar(5)}, one)), 0.7);

  LossConfig two;
  two.num_scales = 2;
  EXPECT_EQ(scalar_of(total_loss({Tensor::scalar(0), Tensor::scalar(0)}, {Tensor::scalar(0), Tensor::scalar(0)}, two)), 0);
  EXPECT_NEAR(scalar_of(total_loss({Tensor::scalar(0.2), Tensor::scalar(0.4)}, {Tensor::scalar(1), Tensor::scalar(1)}, two)),
              0.301, 1e-15);
}

TEST(TotalLoss, LengthMismatchIsContractError) {
  LossConfig cfg;
  cfg.num_scales = 2;
  EXPECT_THROW(total_loss({Tensor::scalar(1), Tensor::scalar(1)}, {Tensor::scalar(1)}, cfg), ContractError);
  EXPECT_THROW(total_loss({Tensor::scalar(1)}, {Tensor::scalar(1)}, cfg), ContractError);
}

TEST(LossGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  const Tensor mask = Tensor::full({1, 1, 8, 8}, 1);
  const auto loss_fn = [&](const std::vector<Tensor>& in) {
    LossConfig cfg;
    return probe(ssim(in[0], in[1])) + photometric_loss({{in[0], mask}, {in[2], mask}}, in[1], cfg) +
           smoothness_loss(in[3], in[1]);
  };
  const auto r = finite_diff_check(loss_fn,
                                   {random_tensor({1, 3, 8, 8}, rng, 0, 1), random_tensor({1, 3, 8, 8}, rng, 0, 1),
                                    random_tensor({1, 3, 8, 8}, rng, 0, 1), random_tensor({1, 1, 8, 8}, rng, 0.1, 0.9)},
                                   1e-5);
  EXPECT_LT(r.max_rel_error, 1e-5);
}
