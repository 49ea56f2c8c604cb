#include "daccn/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "daccn/errors.hpp"
#include "daccn/ops.hpp"

namespace daccn {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw ConfigError("camera intrinsics require fx > 0 and fy > 0");
}

CameraIntrinsics CameraIntrinsics::scaled(Real sx, Real sy) const { return {fx * sx, fy * sy, ox * sx, oy * sy}; }

RigidTransform RigidTransform::from_axis_angle(const std::array<Real, 3>& a, const std::array<Real, 3>& t) {
  RigidTransform T;
  T.translation = t;
  const Real theta = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  if (theta == 0) return T;
  const Real kx = a[0] / theta, ky = a[1] / theta, kz = a[2] / theta;
  const Real s = std::sin(theta), c = std::cos(theta), v = 1 - c;
  T.rotation = {c + kx * kx * v,      kx * ky * v - kz * s, kx * kz * v + ky * s,
                ky * kx * v + kz * s, c + ky * ky * v,      ky * kz * v - kx * s,
                kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v};
  return T;
}

std::array<Real, 3> RigidTransform::apply(const std::array<Real, 3>& p) const {
  const auto& R = rotation;
  return {R[0] * p[0] + R[1] * p[1] + R[2] * p[2] + translation[0],
          R[3] * p[0] + R[4] * p[1] + R[5] * p[2] + translation[1],
          R[6] * p[0] + R[7] * p[1] + R[8] * p[2] + translation[2]};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv.rotation[i * 3 + j] = rotation[j * 3 + i];
  for (int i = 0; i < 3; ++i)
    inv.translation[i] = -(inv.rotation[i * 3] * translation[0] + inv.rotation[i * 3 + 1] * translation[1] +
                           inv.rotation[i * 3 + 2] * translation[2]);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Real acc = 0;
      for (int k = 0; k < 3; ++k) acc += rotation[i * 3 + k] * other.rotation[k * 3 + j];
      out.rotation[i * 3 + j] = acc;
    }
  out.translation = apply(other.translation);
  return out;
}

Real RigidTransform::orthonormality_error() const {
  Real worst = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Real acc = 0;
      for (int k = 0; k < 3; ++k) acc += rotation[k * 3 + i] * rotation[k * 3 + j];
      worst = std::max(worst, std::abs(acc - (i == j ? 1 : 0)));
    }
  return worst;
}

Real RigidTransform::determinant() const {
  const auto& R = rotation;
  return R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) + R[2] * (R[3] * R[7] - R[4] * R[6]);
}

PoseTensors PoseTensors::from_transforms(const std::vector<RigidTransform>& transforms) {
  const auto n = static_cast<std::int64_t>(transforms.size());
  std::vector<Real> r, t;
  for (const auto& T : transforms) {
    r.insert(r.end(), T.rotation.begin(), T.rotation.end());
    t.insert(t.end(), T.translation.begin(), T.translation.end());
  }
  return {Tensor::from_values({n, 3, 3}, std::move(r)), Tensor::from_values({n, 3}, std::move(t))};
}

std::vector<RigidTransform> PoseTensors::to_transforms() const {
  std::vector<RigidTransform> out(static_cast<std::size_t>(rotation.dim(0)));
  for (std::size_t n = 0; n < out.size(); ++n) {
    std::copy_n(rotation.values().begin() + static_cast<std::ptrdiff_t>(n * 9), 9, out[n].rotation.begin());
    std::copy_n(translation.values().begin() + static_cast<std::ptrdiff_t>(n * 3), 3, out[n].translation.begin());
  }
  return out;
}

PoseTensors pose_from_axis_angle(const Tensor& axis_angle, const Tensor& translation) {
  if (axis_angle.rank() != 2 || axis_angle.dim(1) != 3 || translation.shape() != axis_angle.shape())
    throw DimensionError("pose_from_axis_angle: expected [N,3] axis-angle and translation");
  const auto n = axis_angle.dim(0);
  const Tensor ax = slice(axis_angle, 1, 0, 1), ay = slice(axis_angle, 1, 1, 1), az = slice(axis_angle, 1, 2, 1);
  const Tensor xx = ax * ax, yy = ay * ay, zz = az * az;
  // The tiny offset keeps theta > 0 so sin(theta)/theta is defined at the identity.
  const Tensor theta = sqrt(xx + yy + zz + Real(1e-24));
  const Tensor s = sin(theta) / theta;
  const Tensor c = (1.0 - cos(theta)) / square(theta);
  const Tensor r00 = 1.0 - c * (yy + zz), r11 = 1.0 - c * (xx + zz), r22 = 1.0 - c * (xx + yy);
  const Tensor r01 = c * ax * ay - s * az, r10 = c * ax * ay + s * az;
  const Tensor r02 = c * ax * az + s * ay, r20 = c * ax * az - s * ay;
  const Tensor r12 = c * ay * az - s * ax, r21 = c * ay * az + s * ax;
  const Tensor rot = reshape(concat({r00, r01, r02, r10, r11, r12, r20, r21, r22}, 1), {n, 3, 3});
  return {rot, translation};
}

void DepthMap::validate(Real d_min, Real d_max) const {
  if (values.rank() != 4 || values.dim(1) != 1) throw DimensionError("depth map must be [N,1,H,W]");
  for (Real v : values.values())
    if (!(v >= d_min && v <= d_max))
      throw DomainError("depth value " + std::to_string(v) + " outside [" + std::to_string(d_min) + ", " +
                        std::to_string(d_max) + "]");
}

Tensor pixel_coordinates(std::int64_t batch, std::int64_t h, std::int64_t w) {
  std::vector<Real> v(static_cast<std::size_t>(batch * 2 * h * w));
  for (std::int64_t n = 0; n < batch; ++n)
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j) {
        v[static_cast<std::size_t>(((n * 2 + 0) * h + i) * w + j)] = static_cast<Real>(j);
        v[static_cast<std::size_t>(((n * 2 + 1) * h + i) * w + j)] = static_cast<Real>(i);
      }
  return Tensor::from_values({batch, 2, h, w}, std::move(v));
}

namespace {

// Reprojections this close outside the frame still count as inside (round-off at the border).
constexpr Real kEdgeSlack = 1e-6;

Tensor project_components(const Tensor& x, const Tensor& y, const Tensor& z, const CameraIntrinsics& K) {
  return concat({x / z * K.fx + K.ox, y / z * K.fy + K.oy}, 1);
}

void require_points(const Tensor& points, const char* op) {
  if (points.rank() != 4 || points.dim(1) != 3)
    throw DimensionError(std::string(op) + ": points must be [N,3,H,W], got " + shape_to_string(points.shape()));
}

// [N,2,H,W] pixel coordinates to a [N,H,W,2] normalized sampling grid.
Tensor to_sampling_grid(const Tensor& pix, std::int64_t src_h, std::int64_t src_w) {
  const auto n = pix.dim(0), h = pix.dim(2), w = pix.dim(3);
  const Real sx = src_w > 1 ? Real(2) / static_cast<Real>(src_w - 1) : 0;
  const Real sy = src_h > 1 ? Real(2) / static_cast<Real>(src_h - 1) : 0;
  std::vector<Real> grid(static_cast<std::size_t>(n * h * w * 2));
  const auto pv = pix.values();
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t k = 0; k < h * w; ++k) {
      grid[static_cast<std::size_t>((b * h * w + k) * 2)] = pv[static_cast<std::size_t>((b * 2) * h * w + k)] * sx - 1;
      grid[static_cast<std::size_t>((b * h * w + k) * 2 + 1)] =
          pv[static_cast<std::size_t>((b * 2 + 1) * h * w + k)] * sy - 1;
    }
  return make_result("to_sampling_grid", {n, h, w, 2}, std::move(grid), {pix}, [n, h, w, sx, sy](Node& node) {
    auto g = node.grad_in(0);
    if (g.empty()) return;
    const auto go = node.grad_out();
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t k = 0; k < h * w; ++k) {
        g[static_cast<std::size_t>((b * 2) * h * w + k)] += go[static_cast<std::size_t>((b * h * w + k) * 2)] * sx;
        g[static_cast<std::size_t>((b * 2 + 1) * h * w + k)] +=
            go[static_cast<std::size_t>((b * h * w + k) * 2 + 1)] * sy;
      }
  });
}

}  // namespace

Tensor project(const Tensor& points, const CameraIntrinsics& K) {
  require_points(points, "project");
  K.validate();
  const Tensor z = slice(points, 1, 2, 1);
  if (std::any_of(z.values().begin(), z.values().end(), [](Real v) { return !(v > kMinProjectDepth); }))
    throw DomainError("project: point with Z <= 1e-6");
  return project_components(slice(points, 1, 0, 1), slice(points, 1, 1, 1), z, K);
}

Tensor backproject(const DepthMap& depth, const CameraIntrinsics& K) {
  K.validate();
  const Tensor& d = depth.values;
  if (d.rank() != 4 || d.dim(1) != 1) throw DimensionError("backproject: depth must be [N,1,H,W]");
  const auto n = d.dim(0), h = d.dim(2), w = d.dim(3);
  const Tensor pix = pixel_coordinates(n, h, w);
  // Normalized rays (x - ox)/fx, (y - oy)/fy, 1 scaled by depth.
  const Tensor rx = (slice(pix, 1, 0, 1) - K.ox) / K.fx;
  const Tensor ry = (slice(pix, 1, 1, 1) - K.oy) / K.fy;
  return concat({rx * d, ry * d, d}, 1);
}

Tensor transform_points(const Tensor& points, const PoseTensors& pose) {
  require_points(points, "transform_points");
  const auto n = points.dim(0), hw = points.dim(2) * points.dim(3);
  if (pose.rotation.shape() != Shape{n, 3, 3} || pose.translation.shape() != Shape{n, 3})
    throw DimensionError("transform_points: pose batch does not match points");
  std::vector<Real> out(static_cast<std::size_t>(n * 3 * hw));
  const auto P = points.values(), R = pose.rotation.values(), t = pose.translation.values();
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t i = 0; i < 3; ++i) {
      const Real* r = &R[static_cast<std::size_t>(b * 9 + i * 3)];
      for (std::int64_t k = 0; k < hw; ++k) {
        const auto base = static_cast<std::size_t>(b * 3 * hw + k);
        out[static_cast<std::size_t>((b * 3 + i) * hw + k)] =
            r[0] * P[base] + r[1] * P[base + static_cast<std::size_t>(hw)] +
            r[2] * P[base + 2 * static_cast<std::size_t>(hw)] + t[static_cast<std::size_t>(b * 3 + i)];
      }
    }
  return make_result("transform_points", points.shape(), std::move(out), {points, pose.rotation, pose.translation},
                     [n, hw](Node& node) {
                       const auto& P = node.inputs[0]->data;
                       const auto& R = node.inputs[1]->data;
                       const auto go = node.grad_out();
                       auto gp = node.grad_in(0);
                       auto gr = node.grad_in(1);
                       auto gt = node.grad_in(2);
                       for (std::int64_t b = 0; b < n; ++b)
                         for (std::int64_t i = 0; i < 3; ++i) {
                           const auto orow = static_cast<std::size_t>((b * 3 + i) * hw);
                           Real acc_t = 0, acc_r[3] = {0, 0, 0};
                           for (std::int64_t k = 0; k < hw; ++k) {
                             const Real g = go[orow + static_cast<std::size_t>(k)];
                             acc_t += g;
                             for (std::int64_t j = 0; j < 3; ++j) {
                               const auto pi = static_cast<std::size_t>((b * 3 + j) * hw + k);
                               acc_r[j] += g * P[pi];
                               if (!gp.empty()) gp[pi] += g * R[static_cast<std::size_t>(b * 9 + i * 3 + j)];
                             }
                           }
                           if (!gt.empty()) gt[static_cast<std::size_t>(b * 3 + i)] += acc_t;
                           if (!gr.empty())
                             for (std::int64_t j = 0; j < 3; ++j)
                               gr[static_cast<std::size_t>(b * 9 + i * 3 + j)] += acc_r[j];
                         }
                     });
}

WarpResult warp_image(const Tensor& source, const DepthMap& target_depth, const PoseTensors& target_to_source,
                      const CameraIntrinsics& K) {
  if (source.rank() != 4) throw DimensionError("warp_image: source must be [N,C,H,W]");
  const auto n = source.dim(0), h = source.dim(2), w = source.dim(3);
  if (target_depth.values.shape() != Shape{n, 1, h, w})
    throw DimensionError("warp_image: depth shape " + shape_to_string(target_depth.values.shape()) +
                         " does not match source " + shape_to_string(source.shape()));
  const Tensor moved = transform_points(backproject(target_depth, K), target_to_source);
  const Tensor z = slice(moved, 1, 2, 1);

  // Points behind the camera are masked; their depth is replaced by 1 so projection stays finite.
  std::vector<Real> front(z.values().size()), fill(z.values().size());
  for (std::size_t k = 0; k < front.size(); ++k) {
    front[k] = z.values()[k] > kMinProjectDepth ? 1 : 0;
    fill[k] = 1 - front[k];
  }
  const Tensor front_mask = Tensor::from_values(z.shape(), front);
  const Tensor safe_z = z * front_mask + Tensor::from_values(z.shape(), std::move(fill));
  const Tensor pix = project_components(slice(moved, 1, 0, 1), slice(moved, 1, 1, 1), safe_z, K);

  std::vector<Real> mask(front.size());
  const auto pv = pix.values();
  const auto hw = static_cast<std::size_t>(h * w);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::size_t k = 0; k < hw; ++k) {
      const auto m = static_cast<std::size_t>(b) * hw + k;
      const Real x = pv[static_cast<std::size_t>(b) * 2 * hw + k];
      const Real y = pv[(static_cast<std::size_t>(b) * 2 + 1) * hw + k];
      const bool inside = x >= -kEdgeSlack && x <= static_cast<Real>(w - 1) + kEdgeSlack && y >= -kEdgeSlack &&
                          y <= static_cast<Real>(h - 1) + kEdgeSlack;
      mask[m] = (front[m] > 0 && inside) ? 1 : 0;
    }
  return {bilinear_sample(source, to_sampling_grid(pix, h, w)), Tensor::from_values({n, 1, h, w}, std::move(mask))};
}

WarpResult warp_image(const Tensor& source, const DepthMap& target_depth,
                      const std::vector<RigidTransform>& target_to_source, const CameraIntrinsics& K) {
  return warp_image(source, target_depth, PoseTensors::from_transforms(target_to_source), K);
}

DepthMap disparity_to_depth(const Tensor& disp, Real d_min, Real d_max) {
  if (!(d_min > 0 && d_min < d_max)) throw ConfigError("disparity_to_depth: require 0 < d_min < d_max");
  if (std::any_of(disp.values().begin(), disp.values().end(), [](Real v) { return !(v > 0 && v < 1); }))
    throw DomainError("disparity_to_depth: disparity outside (0, 1)");
  const Real lo = 1 / d_max, span = 1 / d_min - 1 / d_max;
  // Written as 1 / (lo + disp * span) through the tape.
  const Tensor inv_depth = disp * span + lo;
  return {Tensor::full(disp.shape(), 1) / inv_depth};
}

}  // namespace daccn
