#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "daccn/config.hpp"
#include "daccn/metrics.hpp"
#include "daccn/model.hpp"
#include "daccn/synthdata.hpp"

namespace daccn {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitGradcheck = 4,
};

/// One training batch at the model's input resolution.
struct Batch {
  Tensor target;                                       // [N,3,H,W]
  std::array<Tensor, 2> sources;                       // [N,3,H,W]
  std::array<std::vector<RigidTransform>, 2> poses;    // target -> source, per item
  CameraIntrinsics K;                                  // matching the (possibly resized) images
};

/// Stacks samples into a batch, resizing images to (h, w) when they differ
/// from the rendered size and adjusting the intrinsics to match.
Batch make_batch(const std::vector<const SceneSample*>& samples, std::int64_t h, std::int64_t w);

struct LossTerms {
  Tensor total;
  Real photometric = 0;  // mean over scales
  Real smoothness = 0;   // mean over scales
};

/// Four-scale self-supervised objective for one batch. Every disparity map is
/// upsampled to the input size for reprojection; smoothness uses the native
/// map against the correspondingly resized target.
LossTerms compute_loss(const DaCCNModel& model, const Batch& batch, const LossConfig& loss, PoseMode pose_mode);

/// Full-resolution depth from the finest disparity head, resized to (h, w).
Tensor predict_depth(const DaCCNModel& model, const Tensor& images, std::int64_t h, std::int64_t w);

/// Mean per-image metrics over samples (one forward pass per sample).
MetricsReport evaluate(const DaCCNModel& model, const std::vector<SceneSample>& samples, const MetricsOptions& options);

struct LossRecord {
  int iteration;
  double total, photometric, smoothness;
};

struct TrainResult {
  std::vector<LossRecord> trace;
  MetricsReport metrics;
  std::vector<std::pair<Real, Real>> learned_scales;  // (s_x, s_y) per encoder branch
  double seconds = 0;
};

/// Window means used to judge convergence: the first and last `window` records.
std::pair<double, double> loss_window_means(const std::vector<LossRecord>& trace, std::size_t window = 10);

std::string loss_trace_text(const std::vector<LossRecord>& trace);

/// Generates the dataset, trains, evaluates on the validation split and writes
/// config.json, loss_trace.csv, metrics.csv, metrics.txt and model.ckpt into
/// cfg.output_dir. NumericError names the first non-finite quantity.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvalOptions {
  bool oracle = false;  // feed ground truth as the prediction
  int dump_count = 0;   // samples whose image, prediction and gt are written as PPM/PFM
};

/// Evaluates a checkpoint on the validation split described by cfg and writes
/// eval_metrics.csv / eval_metrics.txt (plus dumps) into cfg.output_dir.
MetricsReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const EvalOptions& options,
                       std::ostream& log);

struct StretchRow {
  std::string setting;
  std::int64_t input_h, input_w;
  MetricsReport metrics;
  std::int64_t macs;
};

/// Trains at (H,W), (H,2W), (2H,W) and (2H,2W) on the same scenes, rendered at
/// (H,W) and resized to each input size.
std::vector<StretchRow> cmd_stretch_experiment(const RunConfig& base, std::ostream& log);
std::string format_stretch_table(const std::vector<StretchRow>& rows);

struct AblationRow {
  std::string setting;
  bool dam, cc;
  MetricsReport metrics;
  std::vector<std::pair<Real, Real>> learned_scales;
};

std::vector<AblationRow> cmd_ablate(const RunConfig& base, std::ostream& log);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

// Writes text to path, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace daccn
