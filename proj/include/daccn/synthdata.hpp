#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "daccn/geometry.hpp"
#include "daccn/tensor.hpp"

namespace daccn {

using Vec3 = std::array<Real, 3>;

/// Parameters of the procedural box world. Lengths are metres in the target
/// camera frame: x right, y down, z forward; the ground is the plane y = camera_height.
struct SceneSpec {
  int image_h = 96;
  int image_w = 160;
  Real focal_ratio = 0.6;  // fx = fy = focal_ratio * image_w
  Real camera_height = 0.2;
  Real camera_pitch = 0.6;  // radians, downward tilt of the target camera
  int min_boxes = 2;
  int max_boxes = 6;
  std::array<Real, 2> box_width{0.05, 0.18};
  std::array<Real, 2> box_height{0.03, 0.12};
  std::array<Real, 2> box_depth{0.05, 0.18};
  std::array<Real, 2> box_x{-0.35, 0.35};
  std::array<Real, 2> box_z{0.3, 1.0};           // horizontal distance from the camera
  std::array<Real, 2> lateral_motion{0.01, 0.03};  // |x| of each source camera centre
  Real vertical_motion = 0.005;                  // max |y| of each source camera centre
  Real forward_motion = 0.02;                    // max |z| of each source camera centre
  Real max_rotation = 0.02;                       // radians, per axis
  int texture_octaves = 4;
  Real texture_wavelength = 0.15;  // coarsest octave
  int supersample = 2;            // samples per pixel side
  Real d_min = 0.1;
  Real d_max = 100;
  Real min_visible_fraction = 0.7;
  Real max_consistency_error = 0.02;
  int max_attempts = 100;
  std::uint64_t seed = 1;

  void validate() const;
  CameraIntrinsics intrinsics() const;
  // Scene (gravity-aligned) frame to target camera frame: a pure pitch rotation.
  RigidTransform world_to_target() const;
};

struct Box {
  Vec3 lo, hi;  // axis-aligned corners
  Vec3 albedo;
};

struct TextureWave {
  Vec3 direction;  // unit
  Real wavelength;
  Real amplitude;
  Real phase;
};

struct RayHit {
  bool hit = false;
  Real t = 0;  // distance along the unit ray
  Vec3 point{}, normal{}, albedo{};
};

/// Analytic scene: optional ground plane, optional fronto-parallel back wall,
/// boxes, a world-anchored solid texture and one directional light.
struct Scene {
  bool has_ground = true;
  Real ground_y = 0.15;
  bool has_wall = true;
  Real wall_z = 2.5;
  Vec3 ground_albedo{0.55, 0.5, 0.42};
  Vec3 wall_albedo{0.5, 0.58, 0.68};
  std::vector<Box> boxes;
  std::vector<TextureWave> texture;
  Vec3 light_direction{-0.3, -0.85, -0.43};  // towards the light, unit
  Real ambient = 0.35;

  // `direction` must be unit length.
  RayHit intersect(const Vec3& origin, const Vec3& direction) const;
  // Lambertian colour of a hit point; view-independent.
  Vec3 shade(const RayHit& hit, Real focal) const;
};

/// Random directional texture with `octaves` octaves halving the wavelength each time.
std::vector<TextureWave> make_texture(std::uint64_t seed, int octaves, Real coarsest_wavelength);

/// Renders the scene seen by a camera whose extrinsics map scene points to
/// camera points (identity for the target view). Returns [3,H,W] in [0,1].
Tensor render_image(const Scene& scene, const RigidTransform& world_to_camera, const CameraIntrinsics& K, int h,
                    int w, int supersample);

/// Per-pixel camera z-depth [1,1,H,W]. GenerationError if a ray escapes.
Tensor render_depth(const Scene& scene, const CameraIntrinsics& K, int h, int w,
                    const RigidTransform& world_to_camera = RigidTransform::identity());

/// Fraction of target pixels whose surface point projects inside the source
/// frame with positive depth and is not hidden by nearer geometry.
Real visible_fraction(const Scene& scene, const Tensor& depth, const RigidTransform& target_to_source,
                      const CameraIntrinsics& K, const RigidTransform& world_to_target = RigidTransform::identity());

/// Mean |warp(source) - target| over the warp's valid mask and channels.
Real warp_consistency_error(const Tensor& target, const Tensor& source, const Tensor& depth,
                            const RigidTransform& target_to_source, const CameraIntrinsics& K);

struct SceneSample {
  Tensor target;                  // [3,H,W]
  std::array<Tensor, 2> sources;  // [3,H,W] each
  DepthMap gt_depth;              // [1,1,H,W]
  std::array<RigidTransform, 2> poses;  // target -> source
  RigidTransform world_to_target;
  CameraIntrinsics K;
  Scene scene;
  std::array<Real, 2> visibility{};
  std::array<Real, 2> consistency_error{};
  int attempts = 0;
};

/// Places boxes and source cameras from spec.seed, renders all three views and
/// retries until both sources satisfy the visibility and warp-consistency
/// bounds. GenerationError after spec.max_attempts placements.
SceneSample generate_scene(const SceneSpec& spec);

/// Indexed, reproducible collection of scenes. Sample i uses a seed derived
/// from (seed, i); even indices form the training split, odd ones validation.
class SceneDataset {
 public:
  SceneDataset(SceneSpec spec, std::int64_t count, std::uint64_t seed);

  std::int64_t size() const { return count_; }
  SceneSample sample(std::int64_t index) const;
  std::uint64_t sample_seed(std::int64_t index) const;
  static bool is_validation(std::int64_t index) { return index % 2 == 1; }
  std::vector<std::int64_t> train_indices() const;
  std::vector<std::int64_t> validation_indices() const;

 private:
  SceneSpec spec_;
  std::int64_t count_;
  std::uint64_t seed_;
};

/// Stacks [3,H,W] (or [1,H,W]) images into a batch [N,C,H,W].
Tensor stack_images(const std::vector<Tensor>& images);

}  // namespace daccn
