#pragma once

#include <array>
#include <vector>

#include "daccn/tensor.hpp"

namespace daccn {

inline constexpr Real kMinProjectDepth = 1e-6;

// Pixel (row i, column j) sits at continuous coordinates (x, y) = (j, i).
struct CameraIntrinsics {
  Real fx = 1, fy = 1, ox = 0, oy = 0;

  void validate() const;
  // Intrinsics for the same camera rendered at a resized image (x scaled by sx, y by sy).
  CameraIntrinsics scaled(Real sx, Real sy) const;
};

struct RigidTransform {
  std::array<Real, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<Real, 3> translation{0, 0, 0};

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const std::array<Real, 3>& axis_angle,
                                        const std::array<Real, 3>& translation);

  std::array<Real, 3> apply(const std::array<Real, 3>& p) const;
  RigidTransform inverse() const;
  // (this * other)(p) = this(other(p))
  RigidTransform compose(const RigidTransform& other) const;
  // max |R^T R - I| and det(R)
  Real orthonormality_error() const;
  Real determinant() const;
};

/// Differentiable batch of poses: rotation [N,3,3] and translation [N,3].
struct PoseTensors {
  Tensor rotation;
  Tensor translation;

  static PoseTensors from_transforms(const std::vector<RigidTransform>& transforms);
  std::vector<RigidTransform> to_transforms() const;
};

/// Rodrigues map from axis-angle [N,3] plus translation [N,3], built from
/// differentiable ops so gradients reach a pose predictor.
PoseTensors pose_from_axis_angle(const Tensor& axis_angle, const Tensor& translation);

/// Metric depth [N,1,H,W]; strictly positive.
struct DepthMap {
  Tensor values;

  void validate(Real d_min, Real d_max) const;
};

// Constant [N,2,H,W] tensor holding (x, y) = (j, i) for every pixel.
Tensor pixel_coordinates(std::int64_t batch, std::int64_t h, std::int64_t w);

/// Camera-frame points [N,3,H,W] to pixel coordinates [N,2,H,W]:
/// x = fx X/Z + ox, y = fy Y/Z + oy. DomainError when any Z <= 1e-6.
Tensor project(const Tensor& points, const CameraIntrinsics& K);

/// Pixel grid lifted to camera-frame points [N,3,H,W] by depth.
Tensor backproject(const DepthMap& depth, const CameraIntrinsics& K);

// R p + t for every pixel of points [N,3,H,W].
Tensor transform_points(const Tensor& points, const PoseTensors& pose);

struct WarpResult {
  Tensor image;       // [N,C,H,W]
  Tensor valid_mask;  // [N,1,H,W], 1 where the reprojection lands inside the source with Z > 0
};

/// Synthesizes the target view from `source`: back-project target pixels with
/// target depth, move them by `target_to_source`, project, and bilinearly
/// sample the source there. Invalid pixels are masked, never raised.
WarpResult warp_image(const Tensor& source, const DepthMap& target_depth, const PoseTensors& target_to_source,
                      const CameraIntrinsics& K);
WarpResult warp_image(const Tensor& source, const DepthMap& target_depth,
                      const std::vector<RigidTransform>& target_to_source, const CameraIntrinsics& K);

/// depth = 1 / (1/d_max + disp (1/d_min - 1/d_max)); disp must lie strictly in (0, 1).
DepthMap disparity_to_depth(const Tensor& disp, Real d_min, Real d_max);

}  // namespace daccn
