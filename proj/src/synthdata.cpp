#include "daccn/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "daccn/autodiff.hpp"
#include "daccn/errors.hpp"
#include "daccn/ops.hpp"
#include "daccn/rng.hpp"

namespace daccn {

namespace {

Real dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Real norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 scaled(const Vec3& a, Real s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 along(const Vec3& o, const Vec3& d, Real t) { return {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]}; }

Real smoothstep(Real lo, Real hi, Real x) {
  const Real u = std::clamp((x - lo) / (hi - lo), Real(0), Real(1));
  return u * u * (3 - 2 * u);
}

void check_range(const std::array<Real, 2>& r, const char* name) {
  if (!(r[0] <= r[1])) throw ConfigError(std::string("scene.") + name + " must satisfy lo <= hi");
}

// Ray from the camera centre through pixel (x, y), in scene coordinates.
struct CameraRays {
  Vec3 centre;
  std::array<Real, 9> cam_to_world;  // row-major
  CameraIntrinsics K;

  CameraRays(const RigidTransform& world_to_camera, const CameraIntrinsics& k) : K(k) {
    const RigidTransform inv = world_to_camera.inverse();
    centre = inv.translation;
    cam_to_world = inv.rotation;
  }
  Vec3 direction(Real x, Real y) const {
    const Vec3 c{(x - K.ox) / K.fx, (y - K.oy) / K.fy, 1};
    const auto& R = cam_to_world;
    const Vec3 d{R[0] * c[0] + R[1] * c[1] + R[2] * c[2], R[3] * c[0] + R[4] * c[1] + R[5] * c[2],
                 R[6] * c[0] + R[7] * c[1] + R[8] * c[2]};
    return scaled(d, 1 / norm(d));
  }
};

}  // namespace

void SceneSpec::validate() const {
  if (image_h < 2 || image_w < 2) throw ConfigError("scene image size must be at least 2x2");
  if (!(focal_ratio > 0)) throw ConfigError("scene.focal_ratio must be positive");
  if (!(camera_height > 0)) throw ConfigError("scene.camera_height must be positive");
  if (min_boxes < 2 || max_boxes > 6 || min_boxes > max_boxes)
    throw ConfigError("scene box count range must lie within [2, 6]");
  for (auto [r, name] : {std::pair{box_width, "box_width"}, std::pair{box_height, "box_height"},
                         std::pair{box_depth, "box_depth"}, std::pair{box_x, "box_x"}, std::pair{box_z, "box_z"},
                         std::pair{lateral_motion, "lateral_motion"}})
    check_range(r, name);
  if (!(box_width[0] > 0 && box_height[0] > 0 && box_depth[0] > 0)) throw ConfigError("scene box sizes must be positive");
  const Real c = std::cos(camera_pitch), s = std::sin(camera_pitch);
  const Real nearest = c * (box_z[0] - box_depth[1] / 2) + s * (camera_height - box_height[1]) - forward_motion;
  if (!(nearest > d_min)) throw ConfigError("scene boxes may come closer than d_min to a camera");
  // Angle below the horizon of the top image row, allowing for source rotation.
  const Real top = camera_pitch - std::atan((image_h - 1) / (2 * focal_ratio * image_w)) - 2 * max_rotation;
  if (!(top > 0.02)) throw ConfigError("scene.camera_pitch must keep every row below the horizon");
  if (!(camera_pitch < 1.2)) throw ConfigError("scene.camera_pitch must be below 1.2 rad");
  if (!(camera_height / std::sin(top) + forward_motion < d_max)) throw ConfigError("scene ground extends beyond d_max");
  if (!(d_min > 0 && d_min < d_max)) throw ConfigError("scene depth range requires 0 < d_min < d_max");
  if (!(forward_motion >= 0 && vertical_motion >= 0 && max_rotation >= 0 && lateral_motion[0] >= 0))
    throw ConfigError("scene motion ranges must be nonnegative");
  if (texture_octaves < 0 || !(texture_wavelength > 0)) throw ConfigError("scene texture parameters invalid");
  if (supersample < 1) throw ConfigError("scene.supersample must be >= 1");
  if (!(min_visible_fraction >= 0 && min_visible_fraction <= 1)) throw ConfigError("scene.min_visible_fraction in [0,1]");
  if (!(max_consistency_error > 0)) throw ConfigError("scene.max_consistency_error must be positive");
  if (max_attempts < 1) throw ConfigError("scene.max_attempts must be >= 1");
}

RigidTransform SceneSpec::world_to_target() const { return RigidTransform::from_axis_angle({camera_pitch, 0, 0}, {0, 0, 0}); }

CameraIntrinsics SceneSpec::intrinsics() const {
  const Real f = focal_ratio * image_w;
  return {f, f, (image_w - 1) / Real(2), (image_h - 1) / Real(2)};
}

RayHit Scene::intersect(const Vec3& o, const Vec3& d) const {
  RayHit best;
  best.t = std::numeric_limits<Real>::infinity();
  auto offer = [&](Real t, const Vec3& normal, const Vec3& albedo) {
    if (t > 1e-9 && t < best.t) {
      best.hit = true;
      best.t = t;
      best.normal = normal;
      best.albedo = albedo;
    }
  };
  if (has_ground && d[1] > 0) offer((ground_y - o[1]) / d[1], {0, -1, 0}, ground_albedo);
  if (has_wall && d[2] > 0) offer((wall_z - o[2]) / d[2], {0, 0, -1}, wall_albedo);
  for (const auto& box : boxes) {
    Real t_near = -std::numeric_limits<Real>::infinity(), t_far = std::numeric_limits<Real>::infinity();
    int axis = -1;
    Real sign = 0;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (d[a] == 0) {
        if (o[a] < box.lo[a] || o[a] > box.hi[a]) miss = true;
        continue;
      }
      Real t0 = (box.lo[a] - o[a]) / d[a], t1 = (box.hi[a] - o[a]) / d[a];
      Real entry_sign = -1;  // entering through the lo face
      if (t0 > t1) {
        std::swap(t0, t1);
        entry_sign = 1;
      }
      if (t0 > t_near) {
        t_near = t0;
        axis = a;
        sign = entry_sign;
      }
      t_far = std::min(t_far, t1);
      if (t_near > t_far) miss = true;
    }
    if (miss || axis < 0) continue;
    Vec3 normal{0, 0, 0};
    normal[static_cast<std::size_t>(axis)] = sign;
    offer(t_near, normal, box.albedo);
  }
  if (best.hit) best.point = along(o, d, best.t);
  return best;
}

Vec3 Scene::shade(const RayHit& hit, Real focal) const {
  // Texture octaves finer than a few pixels at the identity view are faded
  // out. The footprint uses the identity camera only, so every view sees the
  // same surface colour.
  const Real dist = norm(hit.point);
  const Real cos_view = std::max(std::abs(dot(hit.normal, scaled(hit.point, 1 / dist))), Real(0.05));
  const Real footprint = dist / (focal * cos_view);
  Real noise = 0, total = 0;
  for (const auto& wave : texture) {
    const Real fade = smoothstep(3, 6, wave.wavelength / footprint);
    const Real arg = 2 * std::numbers::pi_v<Real> * dot(wave.direction, hit.point) / wave.wavelength + wave.phase;
    noise += wave.amplitude * fade * std::sin(arg);
    total += wave.amplitude;
  }
  const Real pattern = total > 0 ? Real(0.55) + Real(0.45) * noise / total : Real(1);
  const Real lambert = ambient + (1 - ambient) * std::max(Real(0), dot(hit.normal, light_direction));
  Vec3 rgb;
  for (std::size_t c = 0; c < 3; ++c) rgb[c] = std::clamp(hit.albedo[c] * pattern * lambert, Real(0), Real(1));
  return rgb;
}

std::vector<TextureWave> make_texture(std::uint64_t seed, int octaves, Real coarsest_wavelength) {
  Rng rng(seed);
  std::vector<TextureWave> waves;
  constexpr int kWavesPerOctave = 3;
  for (int k = 0; k < octaves; ++k) {
    for (int j = 0; j < kWavesPerOctave; ++j) {
      Vec3 dir;
      Real len = 0;
      do {
        dir = {static_cast<Real>(rng.uniform(-1, 1)), static_cast<Real>(rng.uniform(-1, 1)),
               static_cast<Real>(rng.uniform(-1, 1))};
        len = norm(dir);
      } while (len < 0.2 || len > 1);
      waves.push_back({scaled(dir, 1 / len), coarsest_wavelength / std::pow(Real(2), Real(k)),
                       std::pow(Real(0.6), Real(k)), static_cast<Real>(rng.uniform(0, 2 * std::numbers::pi))});
    }
  }
  return waves;
}

Tensor render_image(const Scene& scene, const RigidTransform& world_to_camera, const CameraIntrinsics& K, int h,
                    int w, int supersample) {
  K.validate();
  if (h < 1 || w < 1 || supersample < 1) throw ConfigError("render_image: bad image size or supersampling");
  const CameraRays rays(world_to_camera, K);
  std::vector<Real> out(static_cast<std::size_t>(3 * h * w));
  const Real inv = Real(1) / supersample;
  const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      Vec3 acc{0, 0, 0};
      for (int a = 0; a < supersample; ++a) {
        for (int b = 0; b < supersample; ++b) {
          const Real y = i + (a + Real(0.5)) * inv - Real(0.5);
          const Real x = j + (b + Real(0.5)) * inv - Real(0.5);
          const RayHit hit = scene.intersect(rays.centre, rays.direction(x, y));
          if (!hit.hit) continue;  // background stays black
          const Vec3 rgb = scene.shade(hit, K.fx);
          for (std::size_t c = 0; c < 3; ++c) acc[c] += rgb[c];
        }
      }
      const auto px = static_cast<std::size_t>(i) * static_cast<std::size_t>(w) + static_cast<std::size_t>(j);
      for (std::size_t c = 0; c < 3; ++c) out[c * plane + px] = acc[c] * inv * inv;
    }
  }
  return Tensor::from_values({3, h, w}, std::move(out));
}

Tensor render_depth(const Scene& scene, const CameraIntrinsics& K, int h, int w,
                    const RigidTransform& world_to_camera) {
  K.validate();
  const CameraRays rays(world_to_camera, K);
  std::vector<Real> out(static_cast<std::size_t>(h * w));
  bool escaped = false;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const RayHit hit = scene.intersect(rays.centre, rays.direction(j, i));
      if (!hit.hit) {
        escaped = true;
        continue;
      }
      out[static_cast<std::size_t>(i * w + j)] = world_to_camera.apply(hit.point)[2];
    }
  }
  if (escaped) throw GenerationError("render_depth: a camera ray hits no surface");
  return Tensor::from_values({1, 1, h, w}, std::move(out));
}

Real visible_fraction(const Scene& scene, const Tensor& depth, const RigidTransform& target_to_source,
                      const CameraIntrinsics& K, const RigidTransform& world_to_target) {
  const auto h = depth.dim(2), w = depth.dim(3);
  const RigidTransform target_to_world = world_to_target.inverse();
  const Vec3 centre = target_to_source.compose(world_to_target).inverse().translation;
  const auto z = depth.values();
  std::int64_t visible = 0;
  for (std::int64_t i = 0; i < h; ++i) {
    for (std::int64_t j = 0; j < w; ++j) {
      const Real d = z[static_cast<std::size_t>(i * w + j)];
      const Vec3 p{d * (j - K.ox) / K.fx, d * (i - K.oy) / K.fy, d};
      const Vec3 q = target_to_source.apply(p);
      if (q[2] <= kMinProjectDepth) continue;
      const Real u = K.fx * q[0] / q[2] + K.ox, v = K.fy * q[1] / q[2] + K.oy;
      if (u < 0 || u > static_cast<Real>(w - 1) || v < 0 || v > static_cast<Real>(h - 1)) continue;
      const Vec3 ray = sub(target_to_world.apply(p), centre);
      const Real dist = norm(ray);
      const RayHit hit = scene.intersect(centre, scaled(ray, 1 / dist));
      if (hit.hit && hit.t >= dist * (1 - 1e-6) - 1e-6) ++visible;
    }
  }
  return static_cast<Real>(visible) / static_cast<Real>(h * w);
}

Real warp_consistency_error(const Tensor& target, const Tensor& source, const Tensor& depth,
                            const RigidTransform& target_to_source, const CameraIntrinsics& K) {
  NoGradGuard guard;
  const WarpResult warped = warp_image(stack_images({source}), DepthMap{depth}, std::vector{target_to_source}, K);
  const Tensor m = warped.valid_mask;
  const Real count = sum(m).item() * static_cast<Real>(target.dim(0));
  if (count == 0) return std::numeric_limits<Real>::infinity();
  return sum(abs(warped.image - stack_images({target})) * m).item() / count;
}

SceneSample generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const CameraIntrinsics K = spec.intrinsics();
  const auto texture = make_texture(rng.next(), spec.texture_octaves, spec.texture_wavelength);

  for (int attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    SceneSample s;
    s.K = K;
    s.attempts = attempt;
    s.world_to_target = spec.world_to_target();
    s.scene.ground_y = spec.camera_height;
    s.scene.has_wall = false;
    s.scene.texture = texture;
    const auto n_boxes = rng.uniform_int(spec.min_boxes, spec.max_boxes);
    for (std::int64_t b = 0; b < n_boxes; ++b) {
      const Real bw = rng.uniform(spec.box_width[0], spec.box_width[1]);
      const Real bh = rng.uniform(spec.box_height[0], spec.box_height[1]);
      const Real bd = rng.uniform(spec.box_depth[0], spec.box_depth[1]);
      const Real x = rng.uniform(spec.box_x[0], spec.box_x[1]);
      const Real z = rng.uniform(spec.box_z[0], spec.box_z[1]);
      Box box{{x - bw / 2, spec.camera_height - bh, z - bd / 2}, {x + bw / 2, spec.camera_height, z + bd / 2}, {}};
      for (auto& c : box.albedo) c = rng.uniform(0.25, 0.95);
      s.scene.boxes.push_back(box);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const Real side = k == 0 ? 1 : -1;
      const Vec3 centre{side * static_cast<Real>(rng.uniform(spec.lateral_motion[0], spec.lateral_motion[1])),
                        static_cast<Real>(rng.uniform(-spec.vertical_motion, spec.vertical_motion)),
                        static_cast<Real>(rng.uniform(-spec.forward_motion, spec.forward_motion))};
      Vec3 axis_angle;
      for (auto& a : axis_angle) a = rng.uniform(-spec.max_rotation, spec.max_rotation);
      s.poses[k] = RigidTransform::from_axis_angle(axis_angle, centre).inverse();
    }

    const Tensor depth = render_depth(s.scene, K, spec.image_h, spec.image_w, s.world_to_target);
    s.gt_depth = DepthMap{depth};
    const auto [lo, hi] = std::minmax_element(depth.values().begin(), depth.values().end());
    if (*lo < spec.d_min || *hi > spec.d_max) continue;

    bool ok = true;
    for (std::size_t k = 0; k < 2 && ok; ++k) {
      s.visibility[k] = visible_fraction(s.scene, depth, s.poses[k], K, s.world_to_target);
      ok = s.visibility[k] >= spec.min_visible_fraction;
    }
    if (!ok) continue;

    s.target = render_image(s.scene, s.world_to_target, K, spec.image_h, spec.image_w, spec.supersample);
    for (std::size_t k = 0; k < 2 && ok; ++k) {
      s.sources[k] =
          render_image(s.scene, s.poses[k].compose(s.world_to_target), K, spec.image_h, spec.image_w, spec.supersample);
      s.consistency_error[k] = warp_consistency_error(s.target, s.sources[k], depth, s.poses[k], K);
      ok = s.consistency_error[k] < spec.max_consistency_error;
    }
    if (ok) return s;
  }
  throw GenerationError("generate_scene: no placement met the visibility and consistency bounds after " +
                        std::to_string(spec.max_attempts) + " attempts (seed " + std::to_string(spec.seed) + ")");
}

SceneDataset::SceneDataset(SceneSpec spec, std::int64_t count, std::uint64_t seed)
    : spec_(std::move(spec)), count_(count), seed_(seed) {
  if (count_ < 1) throw ConfigError("dataset count must be >= 1");
  spec_.validate();
}

std::uint64_t SceneDataset::sample_seed(std::int64_t index) const {
  return mix_seed(mix_seed(seed_) ^ static_cast<std::uint64_t>(index));
}

SceneSample SceneDataset::sample(std::int64_t index) const {
  if (index < 0 || index >= count_) throw ContractError("dataset index " + std::to_string(index) + " out of range");
  SceneSpec spec = spec_;
  spec.seed = sample_seed(index);
  return generate_scene(spec);
}

std::vector<std::int64_t> SceneDataset::train_indices() const {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < count_; ++i)
    if (!is_validation(i)) out.push_back(i);
  return out;
}

std::vector<std::int64_t> SceneDataset::validation_indices() const {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < count_; ++i)
    if (is_validation(i)) out.push_back(i);
  return out;
}

Tensor stack_images(const std::vector<Tensor>& images) {
  if (images.empty()) throw ContractError("stack_images: empty list");
  std::vector<Tensor> parts;
  for (const auto& img : images) {
    if (img.rank() != 3) throw DimensionError("stack_images: expected [C,H,W], got " + shape_to_string(img.shape()));
    parts.push_back(reshape(img, {1, img.dim(0), img.dim(1), img.dim(2)}));
  }
  return parts.size() == 1 ? parts.front() : concat(parts, 0);
}

}  // namespace daccn
