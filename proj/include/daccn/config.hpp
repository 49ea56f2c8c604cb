#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "daccn/losses.hpp"
#include "daccn/metrics.hpp"
#include "daccn/model.hpp"
#include "daccn/synthdata.hpp"

namespace daccn {

struct OptimizerConfig {
  std::string kind = "adam";
  Real lr = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;

  void validate() const;
};

enum class PoseMode { ground_truth, pose_head };

struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  OptimizerConfig optimizer;
  SceneSpec scene;
  MetricsOptions metrics;
  int iterations = 500;
  int batch_size = 2;
  int dataset_size = 96;  // scenes generated; even indices train, odd indices validate
  PoseMode pose_mode = PoseMode::ground_truth;
  int threads = 1;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 1;  // drives scene generation and batch order; model init uses model.seed

  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

/// Strict decoding: `j` is merged over the defaults, so omitted keys keep
/// their defaults while unknown keys and type mismatches raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies "dotted.key=value" to a config document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads a JSON config file (empty path: defaults), applies overrides in order and validates.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

// Pretty-printed defaults, the reference for every accepted key.
std::string default_config_text();

}  // namespace daccn
