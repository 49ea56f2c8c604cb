#include "daccn/config.hpp"

#include <fstream>
#include <sstream>

#include "daccn/errors.hpp"

namespace daccn {

using nlohmann::json;

void OptimizerConfig::validate() const {
  if (kind != "adam") throw ConfigError("optimizer.kind must be \"adam\"");
  if (!(lr > 0)) throw ConfigError("optimizer.lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("optimizer.eps must be positive");
}

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  optimizer.validate();
  scene.validate();
  if (loss.num_scales != model.num_scales) throw ConfigError("loss.num_scales must equal model.num_scales");
  if (!(metrics.d_min > 0 && metrics.d_min < metrics.d_max)) throw ConfigError("metrics depth range invalid");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dataset_size < 2) throw ConfigError("dataset_size must be >= 2 (one training and one validation scene)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

namespace {

json range(const std::array<Real, 2>& r) { return json::array({r[0], r[1]}); }

std::string pose_mode_name(PoseMode m) { return m == PoseMode::ground_truth ? "ground_truth" : "pose_head"; }

PoseMode pose_mode_from(const std::string& s) {
  if (s == "ground_truth") return PoseMode::ground_truth;
  if (s == "pose_head") return PoseMode::pose_head;
  throw ConfigError("pose_mode must be \"ground_truth\" or \"pose_head\", got \"" + s + "\"");
}

bool compatible(const json& def, const json& user) {
  if (def.is_number_float()) return user.is_number();
  if (def.is_number_unsigned()) return user.is_number_unsigned() || (user.is_number_integer() && user.get<std::int64_t>() >= 0);
  if (def.is_number_integer()) return user.is_number_integer();
  return def.type() == user.type();
}

// Recursively overlays `user` on `base`, rejecting keys and types the defaults do not have.
void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key '" + path + "'") + " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + full + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, full);
    } else if (slot.is_array()) {
      if (!value.is_array() || value.size() != slot.size())
        throw ConfigError("config key '" + full + "' must be an array of " + std::to_string(slot.size()));
      for (std::size_t k = 0; k < slot.size(); ++k)
        if (!compatible(slot[k], value[k])) throw ConfigError("config key '" + full + "' has an element of wrong type");
      slot = value;
    } else {
      if (!compatible(slot, value))
        throw ConfigError("config key '" + full + "' expects " + std::string(slot.type_name()) + ", got " +
                          value.type_name());
      slot = value;
    }
  }
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::array<Real, 2> range_field(const json& j, const char* key) {
  const auto v = field<std::vector<Real>>(j, key);
  return {v.at(0), v.at(1)};
}

ModelConfig decode_model(const json& j) {
  ModelConfig m;
  const auto ch = field<std::vector<int>>(j, "branch_channels");
  for (std::size_t k = 0; k < 4; ++k) m.branch_channels[k] = ch.at(k);
  m.input_h = field<int>(j, "input_h");
  m.input_w = field<int>(j, "input_w");
  m.enable_dam = field<bool>(j, "enable_dam");
  m.enable_cc = field<bool>(j, "enable_cc");
  m.enable_pose_head = field<bool>(j, "enable_pose_head");
  m.num_scales = field<int>(j, "num_scales");
  m.d_min = field<Real>(j, "d_min");
  m.d_max = field<Real>(j, "d_max");
  m.seed = field<std::uint64_t>(j, "seed");
  return m;
}

}  // namespace

json to_json(const ModelConfig& m) {
  return json{{"branch_channels", m.branch_channels},
              {"input_h", m.input_h},
              {"input_w", m.input_w},
              {"enable_dam", m.enable_dam},
              {"enable_cc", m.enable_cc},
              {"enable_pose_head", m.enable_pose_head},
              {"num_scales", m.num_scales},
              {"d_min", m.d_min},
              {"d_max", m.d_max},
              {"seed", m.seed}};
}

json to_json(const RunConfig& c) {
  const auto& s = c.scene;
  return json{
      {"model", to_json(c.model)},
      {"loss",
       {{"alpha", c.loss.alpha},
        {"lambda", c.loss.lambda},
        {"min_over_sources", c.loss.min_over_sources},
        {"num_scales", c.loss.num_scales}}},
      {"optimizer",
       {{"kind", c.optimizer.kind},
        {"lr", c.optimizer.lr},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps}}},
      {"scene",
       {{"image_h", s.image_h},
        {"image_w", s.image_w},
        {"focal_ratio", s.focal_ratio},
        {"camera_height", s.camera_height},
        {"camera_pitch", s.camera_pitch},
        {"min_boxes", s.min_boxes},
        {"max_boxes", s.max_boxes},
        {"box_width", range(s.box_width)},
        {"box_height", range(s.box_height)},
        {"box_depth", range(s.box_depth)},
        {"box_x", range(s.box_x)},
        {"box_z", range(s.box_z)},
        {"lateral_motion", range(s.lateral_motion)},
        {"vertical_motion", s.vertical_motion},
        {"forward_motion", s.forward_motion},
        {"max_rotation", s.max_rotation},
        {"texture_octaves", s.texture_octaves},
        {"texture_wavelength", s.texture_wavelength},
        {"supersample", s.supersample},
        {"d_min", s.d_min},
        {"d_max", s.d_max},
        {"min_visible_fraction", s.min_visible_fraction},
        {"max_consistency_error", s.max_consistency_error},
        {"max_attempts", s.max_attempts}}},
      {"metrics",
       {{"median_scaling", c.metrics.median_scaling},
        {"d_min", c.metrics.d_min},
        {"d_max", c.metrics.d_max},
        {"sq_rel", to_string(c.metrics.sq_rel)}}},
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"dataset_size", c.dataset_size},
      {"pose_mode", pose_mode_name(c.pose_mode)},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
      {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  json doc = to_json(ModelConfig{});
  merge_strict(doc, j, "");
  return decode_model(doc);
}

RunConfig run_config_from_json(const json& j) {
  json doc = to_json(RunConfig{});
  merge_strict(doc, j, "");
  RunConfig c;
  c.model = decode_model(doc["model"]);
  const auto& l = doc["loss"];
  c.loss.alpha = field<Real>(l, "alpha");
  c.loss.lambda = field<Real>(l, "lambda");
  c.loss.min_over_sources = field<bool>(l, "min_over_sources");
  c.loss.num_scales = field<int>(l, "num_scales");
  const auto& o = doc["optimizer"];
  c.optimizer.kind = field<std::string>(o, "kind");
  c.optimizer.lr = field<Real>(o, "lr");
  c.optimizer.beta1 = field<Real>(o, "beta1");
  c.optimizer.beta2 = field<Real>(o, "beta2");
  c.optimizer.eps = field<Real>(o, "eps");
  const auto& s = doc["scene"];
  auto& sc = c.scene;
  sc.image_h = field<int>(s, "image_h");
  sc.image_w = field<int>(s, "image_w");
  sc.focal_ratio = field<Real>(s, "focal_ratio");
  sc.camera_height = field<Real>(s, "camera_height");
  sc.camera_pitch = field<Real>(s, "camera_pitch");
  sc.min_boxes = field<int>(s, "min_boxes");
  sc.max_boxes = field<int>(s, "max_boxes");
  sc.box_width = range_field(s, "box_width");
  sc.box_height = range_field(s, "box_height");
  sc.box_depth = range_field(s, "box_depth");
  sc.box_x = range_field(s, "box_x");
  sc.box_z = range_field(s, "box_z");
  sc.lateral_motion = range_field(s, "lateral_motion");
  sc.vertical_motion = field<Real>(s, "vertical_motion");
  sc.forward_motion = field<Real>(s, "forward_motion");
  sc.max_rotation = field<Real>(s, "max_rotation");
  sc.texture_octaves = field<int>(s, "texture_octaves");
  sc.texture_wavelength = field<Real>(s, "texture_wavelength");
  sc.supersample = field<int>(s, "supersample");
  sc.d_min = field<Real>(s, "d_min");
  sc.d_max = field<Real>(s, "d_max");
  sc.min_visible_fraction = field<Real>(s, "min_visible_fraction");
  sc.max_consistency_error = field<Real>(s, "max_consistency_error");
  sc.max_attempts = field<int>(s, "max_attempts");
  const auto& m = doc["metrics"];
  c.metrics.median_scaling = field<bool>(m, "median_scaling");
  c.metrics.d_min = field<Real>(m, "d_min");
  c.metrics.d_max = field<Real>(m, "d_max");
  c.metrics.sq_rel = sq_rel_convention_from_string(field<std::string>(m, "sq_rel"));
  c.iterations = field<int>(doc, "iterations");
  c.batch_size = field<int>(doc, "batch_size");
  c.dataset_size = field<int>(doc, "dataset_size");
  c.pose_mode = pose_mode_from(field<std::string>(doc, "pose_mode"));
  c.threads = field<int>(doc, "threads");
  c.output_dir = field<std::string>(doc, "output_dir");
  c.seed = field<std::uint64_t>(doc, "seed");
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = json{{*it, patch}};
  }
  doc.merge_patch(patch);
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig cfg = run_config_from_json(doc);
  cfg.validate();
  return cfg;
}

std::string default_config_text() { return to_json(RunConfig{}).dump(2) + "\n"; }

}  // namespace daccn
