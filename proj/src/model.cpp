#include "daccn/model.hpp"

#include <cmath>

#include "daccn/errors.hpp"
#include "daccn/ops.hpp"

namespace daccn {

void ModelConfig::validate() const {
  for (int c : branch_channels)
    if (c <= 0) throw ConfigError("model.branch_channels must be positive");
  if (input_h <= 0 || input_w <= 0 || input_h % 16 != 0 || input_w % 16 != 0)
    throw ConfigError("model input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                      " must be positive and divisible by 16");
  // The deepest branch resamples a map of (H/16, W/16); direction-aware resampling needs >= 2 per axis.
  if (enable_dam && (input_h < 32 || input_w < 32))
    throw ConfigError("model input must be at least 32x32 when the direction-aware module is enabled");
  if (num_scales != 4) throw ConfigError("model.num_scales must be 4");
  if (!(d_min > 0 && d_min < d_max)) throw ConfigError("model depth range requires 0 < d_min < d_max");
}

namespace {

// Deterministic uniform draws independent of the standard library's distributions.
class ParamRng {
 public:
  explicit ParamRng(std::uint64_t seed) : state_(seed) {}
  Real uniform(Real bound) {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    return static_cast<Real>((2 * u - 1) * bound);
  }

 private:
  std::uint64_t state_;
};

struct ConvInit {
  ParamRng& rng;
  void operator()(Tensor& w, Tensor& b, std::int64_t out_c, std::int64_t in_c, std::int64_t k) const {
    const Real bound = 1 / std::sqrt(static_cast<Real>(in_c * k * k));
    w = Tensor::zeros({out_c, in_c, k, k}, true);
    b = Tensor::zeros({out_c}, true);
    for (auto& v : w.mutable_values()) v = rng.uniform(bound);
    for (auto& v : b.mutable_values()) v = rng.uniform(bound);
  }
};

}  // namespace

DaCCNModel::DaCCNModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  ParamRng rng(cfg_.seed);
  ConvInit init{rng};
  const auto& ch = cfg_.branch_channels;

  branches_.resize(4);
  for (int b = 0; b < 4; ++b) {
    auto& br = branches_[static_cast<std::size_t>(b)];
    const int in_c = b == 0 ? 3 : ch[static_cast<std::size_t>(b - 1)];
    const int c = ch[static_cast<std::size_t>(b)];
    init(br.down_w, br.down_b, c, in_c, kDownKernel);
    init(br.block.w1, br.block.b1, c, c, 3);
    init(br.block.w2, br.block.b2, c, c, 3);
    br.scales = DirectionScales::unit(cfg_.enable_dam);
  }

  stages_.resize(4);
  for (int s = 0; s < 4; ++s) {
    auto& st = stages_[static_cast<std::size_t>(s)];
    const int level = 3 - s;  // encoder branch this stage pairs with
    const int c = ch[static_cast<std::size_t>(level)];
    const int in_c = s == 0 ? c : ch[static_cast<std::size_t>(level + 1)] + c;
    init(st.fuse_w, st.fuse_b, c, in_c, 3);
    init(st.cc.weight, st.cc.bias, c, c, 3);
    init(st.head_w, st.head_b, 1, c, 3);
  }

  init(pose_.w1, pose_.b1, 16, 6, kDownKernel);
  init(pose_.w2, pose_.b2, 32, 16, kDownKernel);
  init(pose_.w3, pose_.b3, 32, 32, kDownKernel);
  init(pose_.out_w, pose_.out_b, 6, 32, 1);
  for (auto* t : {&pose_.w1, &pose_.b1, &pose_.w2, &pose_.b2, &pose_.w3, &pose_.b3, &pose_.out_w, &pose_.out_b})
    t->set_requires_grad(cfg_.enable_pose_head);
}

std::vector<Tensor> DaCCNModel::encode(const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != 3 || images.dim(2) != cfg_.input_h || images.dim(3) != cfg_.input_w)
    throw DimensionError("encode: expected [N,3," + std::to_string(cfg_.input_h) + "," +
                         std::to_string(cfg_.input_w) + "], got " + shape_to_string(images.shape()));
  std::vector<Tensor> features;
  Tensor x = images;
  for (const auto& br : branches_) {
    x = elu(conv2d(x, br.down_w, br.down_b, 2, 1));
    x = cfg_.enable_dam ? direction_aware_block(x, br.scales, br.block) : br.block.forward(x);
    features.push_back(x);
  }
  return features;
}

std::vector<Tensor> DaCCNModel::decode(const std::vector<Tensor>& features) const {
  if (features.size() != 4) throw DimensionError("decode: expected 4 encoder feature maps");
  std::vector<Tensor> disparities;
  Tensor x;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& st = stages_[s];
    const Tensor& skip = features[3 - s];
    const Tensor fused = s == 0 ? skip : concat({upsample_nearest2x(x), skip}, 1);
    x = elu(conv2d(fused, st.fuse_w, st.fuse_b, 1, 1));
    x = cfg_.enable_cc ? cumulative_convolution(x, st.cc) : activation(st.cc.activation, conv2d(x, st.cc.weight, st.cc.bias, 1, 1));
    disparities.push_back(sigmoid(conv2d(x, st.head_w, st.head_b, 1, 1)));
  }
  return disparities;
}

Tensor DaCCNModel::pose_vector(const Tensor& image_pair) const {
  if (image_pair.rank() != 4 || image_pair.dim(1) != 6)
    throw DimensionError("pose head expects [N,6,H,W], got " + shape_to_string(image_pair.shape()));
  Tensor x = elu(conv2d(image_pair, pose_.w1, pose_.b1, 2, 1));
  x = elu(conv2d(x, pose_.w2, pose_.b2, 2, 1));
  x = elu(conv2d(x, pose_.w3, pose_.b3, 2, 1));
  x = conv2d(x, pose_.out_w, pose_.out_b, 1, 0);
  return reduce(Reduction::mean, x, {2, 3}) * kPoseOutputScale;
}

PoseTensors DaCCNModel::predict_pose(const Tensor& image_pair) const {
  const Tensor v = pose_vector(image_pair);
  return pose_from_axis_angle(slice(v, 1, 0, 3), slice(v, 1, 3, 3));
}

std::vector<NamedTensor> DaCCNModel::all_parameters() const {
  std::vector<NamedTensor> out;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const auto p = "encoder." + std::to_string(b) + ".";
    const auto& br = branches_[b];
    out.push_back({p + "down.weight", br.down_w});
    out.push_back({p + "down.bias", br.down_b});
    out.push_back({p + "block.conv1.weight", br.block.w1});
    out.push_back({p + "block.conv1.bias", br.block.b1});
    out.push_back({p + "block.conv2.weight", br.block.w2});
    out.push_back({p + "block.conv2.bias", br.block.b2});
    out.push_back({p + "log_sx", br.scales.log_sx});
    out.push_back({p + "log_sy", br.scales.log_sy});
  }
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto p = "decoder." + std::to_string(s) + ".";
    const auto& st = stages_[s];
    out.push_back({p + "fuse.weight", st.fuse_w});
    out.push_back({p + "fuse.bias", st.fuse_b});
    out.push_back({p + "cc.weight", st.cc.weight});
    out.push_back({p + "cc.bias", st.cc.bias});
    out.push_back({p + "head.weight", st.head_w});
    out.push_back({p + "head.bias", st.head_b});
  }
  out.push_back({"pose.conv1.weight", pose_.w1});
  out.push_back({"pose.conv1.bias", pose_.b1});
  out.push_back({"pose.conv2.weight", pose_.w2});
  out.push_back({"pose.conv2.bias", pose_.b2});
  out.push_back({"pose.conv3.weight", pose_.w3});
  out.push_back({"pose.conv3.bias", pose_.b3});
  out.push_back({"pose.out.weight", pose_.out_w});
  out.push_back({"pose.out.bias", pose_.out_b});
  return out;
}

std::vector<NamedTensor> DaCCNModel::trainable_parameters() const {
  std::vector<NamedTensor> out;
  for (auto& p : all_parameters()) {
    const bool is_scale = p.name.ends_with("log_sx") || p.name.ends_with("log_sy");
    const bool is_pose = p.name.starts_with("pose.");
    if ((is_scale && !cfg_.enable_dam) || (is_pose && !cfg_.enable_pose_head)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::int64_t DaCCNModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : trainable_parameters()) n += p.tensor.numel();
  return n;
}

std::int64_t DaCCNModel::conv_macs(const ModelConfig& cfg) {
  const auto& ch = cfg.branch_channels;
  auto conv = [](std::int64_t out_c, std::int64_t in_c, std::int64_t k, std::int64_t h, std::int64_t w) {
    return out_c * in_c * k * k * h * w;
  };
  std::int64_t macs = 0;
  std::int64_t h = cfg.input_h, w = cfg.input_w;
  for (int b = 0; b < 4; ++b) {
    h /= 2;
    w /= 2;
    const std::int64_t in_c = b == 0 ? 3 : ch[static_cast<std::size_t>(b - 1)];
    const std::int64_t c = ch[static_cast<std::size_t>(b)];
    macs += conv(c, in_c, kDownKernel, h, w) + 2 * conv(c, c, 3, h, w);
  }
  for (int s = 0; s < 4; ++s) {
    const int level = 3 - s;
    const std::int64_t sh = cfg.input_h >> (level + 1), sw = cfg.input_w >> (level + 1);
    const std::int64_t c = ch[static_cast<std::size_t>(level)];
    const std::int64_t in_c = s == 0 ? c : ch[static_cast<std::size_t>(level + 1)] + c;
    macs += conv(c, in_c, 3, sh, sw) + conv(c, c, 3, sh, sw) + conv(1, c, 3, sh, sw);
  }
  return macs;
}

}  // namespace daccn
