#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "daccn/daccn_ops.hpp"
#include "daccn/geometry.hpp"

namespace daccn {

struct ModelConfig {
  std::array<int, 4> branch_channels{16, 24, 32, 48};
  int input_h = 96;
  int input_w = 160;
  bool enable_dam = true;
  bool enable_cc = true;
  bool enable_pose_head = false;
  int num_scales = 4;
  Real d_min = 0.1;
  Real d_max = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct EncoderBranch {
  Tensor down_w, down_b;  // stride-2 4x4 conv (padding 1) from the previous branch or the image
  DirectionScales scales;
  ConvBlock block;
};

struct DecoderStage {
  Tensor fuse_w, fuse_b;     // 3x3 conv over [upsampled deeper stage, encoder skip]
  CumulativeConvParams cc;   // a bare 3x3 conv + ELU with the same weights when CC is disabled
  Tensor head_w, head_b;     // 3x3 conv to one channel, sigmoid
};

struct PoseHead {
  Tensor w1, b1, w2, b2, w3, b3;  // stride-2 4x4 convs: 6 -> 16 -> 32 -> 32
  Tensor out_w, out_b;            // 1x1 conv to 6 values
};

inline constexpr Real kPoseOutputScale = 0.01;
// Downsampling kernel: with stride 2 and padding 1 it halves any even size exactly.
inline constexpr std::int64_t kDownKernel = 4;

/// Miniature multi-branch encoder with direction-aware blocks and a four-stage
/// decoder with one cumulative convolution per stage.
///
/// Branch b runs at stride 2^(b+1). Decoder stage 0 works on the deepest map
/// (stride 16); stages 1-3 upsample, concatenate the matching encoder map and
/// end at strides 8, 4 and 2. Each stage emits one sigmoid disparity map.
class DaCCNModel {
 public:
  explicit DaCCNModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  std::vector<Tensor> encode(const Tensor& images) const;
  // Coarsest first, finest (stride 2) last.
  std::vector<Tensor> decode(const std::vector<Tensor>& features) const;
  std::vector<Tensor> predict_disparities(const Tensor& images) const { return decode(encode(images)); }

  // image_pair is [N,6,H,W]: target then source RGB.
  PoseTensors predict_pose(const Tensor& image_pair) const;
  // Raw [N,6] head output before scaling (axis-angle then translation).
  Tensor pose_vector(const Tensor& image_pair) const;

  /// Parameters the optimizer updates. Direction scales are included only with
  /// enable_dam; pose-head weights only with enable_pose_head.
  std::vector<NamedTensor> trainable_parameters() const;
  /// Every stored tensor, in checkpoint order.
  std::vector<NamedTensor> all_parameters() const;
  std::int64_t parameter_count() const;

  std::vector<EncoderBranch>& branches() { return branches_; }
  const std::vector<EncoderBranch>& branches() const { return branches_; }
  std::vector<DecoderStage>& stages() { return stages_; }
  PoseHead& pose_head() { return pose_; }

  /// Multiply-accumulate count of all convolutions in one forward pass of the
  /// depth network at unit direction scales.
  static std::int64_t conv_macs(const ModelConfig& cfg);

 private:
  ModelConfig cfg_;
  std::vector<EncoderBranch> branches_;
  std::vector<DecoderStage> stages_;
  PoseHead pose_;
};

/// Bit-exact checkpoint container (see README for the byte layout).
void save_checkpoint(const DaCCNModel& model, const std::string& path);
DaCCNModel load_checkpoint(const std::string& path);
// Config JSON stored in a checkpoint header.
std::string checkpoint_config_json(const std::string& path);

}  // namespace daccn
