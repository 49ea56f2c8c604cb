#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "daccn/errors.hpp"
#include "daccn/geometry.hpp"
#include "daccn/gradcheck.hpp"
#include "daccn/synthdata.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace daccn;
using daccn::testing::probe;
using daccn::testing::random_tensor;
using daccn::testing::to_vector;
using daccn::testing::measure_shift;
using daccn::testing::wall_scene;

namespace {

Tensor point(Real x, Real y, Real z) { return Tensor::from_values({1, 3, 1, 1}, {x, y, z}); }

}  // namespace

TEST(Project, Examples) {
  const Tensor a = project(point(2, 4, 2), {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(a.at({0, 0, 0, 0}), 1);
  EXPECT_DOUBLE_EQ(a.at({0, 1, 0, 0}), 2);
  const Tensor b = project(point(1, 2, 4), {100, 100, 50, 50});
  EXPECT_DOUBLE_EQ(b.at({0, 0, 0, 0}), 75);
  EXPECT_DOUBLE_EQ(b.at({0, 1, 0, 0}), 100);
  for (Real z : {0.5, 3.0, 70.0}) {
    const Tensor c = project(point(0, 0, z), {80, 90, 31.5, 17.25});
    EXPECT_DOUBLE_EQ(c.at({0, 0, 0, 0}), 31.5);
    EXPECT_DOUBLE_EQ(c.at({0, 1, 0, 0}), 17.25);
  }
}

TEST(Project, NonPositiveDepthIsDomainError) {
  EXPECT_THROW(project(point(1, 1, 0), {1, 1, 0, 0}), DomainError);
  EXPECT_THROW(project(point(1, 1, -2), {1, 1, 0, 0}), DomainError);
  EXPECT_THROW(project(point(1, 1, 1e-7), {1, 1, 0, 0}), DomainError);
}

TEST(Backproject, Examples) {
  const Tensor unit = backproject(DepthMap{Tensor::full({1, 1, 3, 4}, 1)}, {1, 1, 0, 0});
  for (std::int64_t i = 0; i < 3; ++i)
    for (std::int64_t j = 0; j < 4; ++j) {
      EXPECT_DOUBLE_EQ(unit.at({0, 0, i, j}), static_cast<Real>(j));
      EXPECT_DOUBLE_EQ(unit.at({0, 1, i, j}), static_cast<Real>(i));
      EXPECT_DOUBLE_EQ(unit.at({0, 2, i, j}), 1);
    }
  // Pixel (o_x + f_x, o_y) = (5, 1) at depth 2.
  const Tensor p = backproject(DepthMap{Tensor::full({1, 1, 3, 6}, 2)}, {4, 4, 1, 1});
  EXPECT_DOUBLE_EQ(p.at({0, 0, 1, 5}), 2);
  EXPECT_DOUBLE_EQ(p.at({0, 1, 1, 5}), 0);
  EXPECT_DOUBLE_EQ(p.at({0, 2, 1, 5}), 2);
}

TEST(Backproject, ProjectRoundTripIsIdentity) {
  std::mt19937_64 rng(1);
  const CameraIntrinsics K{96, 96, 79.5, 47.5};
  const Tensor depth = random_tensor({2, 1, 12, 20}, rng, 0.1, 100);
  const Tensor px = project(backproject(DepthMap{depth}, K), K);
  const Tensor grid = pixel_coordinates(2, 12, 20);
  const auto a = to_vector(px), b = to_vector(grid);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(RigidTransform, AxisAngleIsOrthonormal) {
  const auto t = RigidTransform::from_axis_angle({0.3, -1.2, 0.7}, {1, 2, 3});
  EXPECT_LT(t.orthonormality_error(), 1e-9);
  EXPECT_NEAR(t.determinant(), 1, 1e-12);
  const auto round = t.compose(t.inverse()).apply({0.4, -5, 2});
  EXPECT_NEAR(round[0], 0.4, 1e-12);
  EXPECT_NEAR(round[1], -5, 1e-12);
  EXPECT_NEAR(round[2], 2, 1e-12);
}

TEST(PoseTensors, AxisAngleMatchesRigidTransform) {
  const auto t = RigidTransform::from_axis_angle({0.1, 0.2, -0.3}, {0.5, 0, -1});
  const auto p = pose_from_axis_angle(Tensor::from_values({1, 3}, {0.1, 0.2, -0.3}), Tensor::from_values({1, 3}, {0.5, 0, -1}));
  const auto back = p.to_transforms().at(0);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(back.rotation[k], t.rotation[k], 1e-14);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back.translation[k], t.translation[k], 1e-14);
}

TEST(WarpImage, IdentityPoseReproducesSourceOnMask) {
  std::mt19937_64 rng(2);
  const Tensor source = random_tensor({2, 3, 9, 13}, rng, 0, 1);
  const Tensor depth = random_tensor({2, 1, 9, 13}, rng, 0.5, 40);
  const auto w = warp_image(source, DepthMap{depth}, {RigidTransform::identity(), RigidTransform::identity()},
                            {10, 10, 6, 4});
  EXPECT_EQ(to_vector(w.valid_mask), std::vector<Real>(2 * 9 * 13, 1.0));
  EXPECT_EQ(to_vector(w.image), to_vector(source));
}

TEST(WarpImage, TranslationOutOfViewMasksEverything) {
  std::mt19937_64 rng(3);
  const Tensor source = random_tensor({1, 3, 8, 8}, rng, 0, 1);
  const auto w = warp_image(source, DepthMap{Tensor::full({1, 1, 8, 8}, 1)},
                            {RigidTransform::from_axis_angle({0, 0, 0}, {50, 0, 0})}, {8, 8, 3.5, 3.5});
  for (Real v : w.valid_mask.values()) EXPECT_EQ(v, 0);
}

TEST(WarpImage, IntegerShiftOnFrontoParallelPlane) {
  // f_x t_x / Z = 10 * 0.6 / 2 = 3 px.
  std::mt19937_64 rng(4);
  const Tensor source = random_tensor({1, 3, 6, 12}, rng, 0, 1);
  const auto w = warp_image(source, DepthMap{Tensor::full({1, 1, 6, 12}, 2)},
                            {RigidTransform::from_axis_angle({0, 0, 0}, {0.6, 0, 0})}, {10, 10, 5.5, 2.5});
  for (std::int64_t i = 0; i < 6; ++i)
    for (std::int64_t j = 0; j < 12; ++j) {
      EXPECT_EQ(w.valid_mask.at({0, 0, i, j}), j + 3 <= 11 ? 1 : 0);
      if (j + 3 <= 11)
        for (std::int64_t c = 0; c < 3; ++c) EXPECT_NEAR(w.image.at({0, c, i, j}), source.at({0, c, i, j + 3}), 1e-12);
    }
}

TEST(WarpImage, RenderedPlaneDisparityShift) {
  const int h = 48, w = 96;
  const CameraIntrinsics K{57.6, 57.6, (w - 1) / 2.0, (h - 1) / 2.0};
  for (auto [z, tx] : {std::pair{2.0, 0.05}, {1.5, -0.06}, {3.0, 0.11}}) {
    const Scene scene = wall_scene(z);
    const Tensor target = render_image(scene, RigidTransform::identity(), K, h, w, 4);
    // Target -> source translation tx: the source camera centre sits at -tx.
    const auto target_to_source = RigidTransform::from_axis_angle({0, 0, 0}, {tx, 0, 0});
    const Tensor source = render_image(scene, target_to_source, K, h, w, 4);
    const Real expected = K.fx * tx / z;
    EXPECT_NEAR(measure_shift(target, source, std::round(expected)), expected, 0.01) << "Z=" << z << " tx=" << tx;
  }
}

TEST(WarpImage, ForwardThenInverseWarpRestoresSmoothImage) {
  const int h = 24, w = 40;
  const CameraIntrinsics K{24, 24, 19.5, 11.5};
  std::vector<Real> v(3 * h * w);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        v[static_cast<std::size_t>((c * h + i) * w + j)] = 0.5 + 0.3 * std::sin(0.21 * j + c) * std::cos(0.17 * i);
  const Tensor image = Tensor::from_values({1, 3, h, w}, v);
  const DepthMap plane{Tensor::full({1, 1, h, w}, 3)};
  const auto t = RigidTransform::from_axis_angle({0, 0, 0}, {0.19, 0, 0});
  const auto there = warp_image(image, plane, {t.inverse()}, K);
  const auto back = warp_image(there.image, plane, {t}, K);
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t i = 2; i < h - 2; ++i)
      for (std::int64_t j = 6; j < w - 6; ++j) EXPECT_NEAR(back.image.at({0, c, i, j}), image.at({0, c, i, j}), 0.02);
}

TEST(WarpImage, DepthGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Tensor source = random_tensor({1, 3, 7, 9}, rng, 0, 1);
  const CameraIntrinsics K{7, 7, 4, 3};
  const auto pose = RigidTransform::from_axis_angle({0.01, 0.02, -0.01}, {0.1, 0.02, 0.03});
  const auto fn = [&](const std::vector<Tensor>& in) {
    const auto wr = warp_image(source, DepthMap{in[0]}, {pose}, K);
    return probe(wr.image * wr.valid_mask);
  };
  EXPECT_LT(finite_diff_check(fn, {random_tensor({1, 1, 7, 9}, rng, 2, 4)}, 1e-5).max_rel_error, 1e-4);
}

TEST(DisparityToDepth, Examples) {
  const Tensor d = disparity_to_depth(Tensor::from_values({3}, {1e-12, 1 - 1e-12, 0.5}), 0.1, 100).values;
  EXPECT_NEAR(d.at({0}), 100, 1e-6);
  EXPECT_NEAR(d.at({1}), 0.1, 1e-9);
  EXPECT_NEAR(d.at({2}), 1 / (0.01 + 0.5 * 9.99), 1e-15);
  EXPECT_NEAR(d.at({2}), 0.1998, 1e-4);
}

TEST(DisparityToDepth, MonotoneDecreasing) {
  std::vector<Real> disp;
  for (int k = 1; k < 100; ++k) disp.push_back(k / 100.0);
  const auto d = to_vector(disparity_to_depth(Tensor::from_values({99}, disp), 0.1, 100).values);
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_LT(d[k], d[k - 1]);
}

TEST(DisparityToDepth, OutOfRangeIsDomainError) {
  EXPECT_THROW(disparity_to_depth(Tensor::from_values({1}, {0.0}), 0.1, 100), DomainError);
  EXPECT_THROW(disparity_to_depth(Tensor::from_values({1}, {1.0}), 0.1, 100), DomainError);
  EXPECT_THROW(disparity_to_depth(Tensor::from_values({1}, {1.2}), 0.1, 100), DomainError);
}
