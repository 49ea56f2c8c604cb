#include "daccn/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "daccn/autodiff.hpp"
#include "daccn/errors.hpp"
#include "daccn/image_io.hpp"
#include "daccn/kernels.hpp"
#include "daccn/ops.hpp"
#include "daccn/optimizer.hpp"
#include "daccn/rng.hpp"

namespace daccn {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

Tensor resize_to(const Tensor& x, std::int64_t h, std::int64_t w) { return resize_bilinear(x, h, w); }

bool all_finite(std::span<const Real> v) {
  for (Real x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

void require_finite(const Tensor& t, const std::string& what, int iteration) {
  if (!all_finite(t.values()))
    throw NumericError("non-finite value in " + what + " at iteration " + std::to_string(iteration));
}

struct Pools {
  std::vector<SceneSample> train, val;
};

Pools generate_pools(const RunConfig& cfg, std::ostream& log) {
  const SceneDataset ds(cfg.scene, cfg.dataset_size, cfg.seed);
  Pools pools;
  for (auto i : ds.train_indices()) pools.train.push_back(ds.sample(i));
  for (auto i : ds.validation_indices()) pools.val.push_back(ds.sample(i));
  log << "generated " << pools.train.size() << " training and " << pools.val.size() << " validation scenes ("
      << cfg.scene.image_h << "x" << cfg.scene.image_w << ")\n";
  return pools;
}

std::vector<std::pair<Real, Real>> learned_scales(const DaCCNModel& model) {
  std::vector<std::pair<Real, Real>> out;
  for (const auto& b : model.branches()) out.emplace_back(b.scales.sx(), b.scales.sy());
  return out;
}

std::string metrics_csv(const MetricsReport& m) { return MetricsReport::delimited_header() + "\n" + m.to_delimited() + "\n"; }

TrainResult train_on(const RunConfig& cfg, const Pools& pools, std::ostream& log) {
  cfg.validate();
  kernels::set_num_threads(cfg.threads);
  const auto start = std::chrono::steady_clock::now();
  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text_file(dir + "/config.json", to_json(cfg).dump(2) + "\n");

  DaCCNModel model(cfg.model);
  std::vector<Tensor> params;
  for (const auto& p : model.trainable_parameters()) params.push_back(p.tensor);
  Adam opt(params, cfg.optimizer);
  const auto named = model.trainable_parameters();

  const auto h = cfg.model.input_h, w = cfg.model.input_w;
  Rng order_rng(mix_seed(cfg.seed ^ 0x5eedba7c4ULL));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  auto next_index = [&]() {
    if (cursor == order.size()) {
      order.resize(pools.train.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      for (std::size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
      cursor = 0;
    }
    return order[cursor++];
  };

  TrainResult result;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<const SceneSample*> items;
    for (int b = 0; b < cfg.batch_size; ++b) items.push_back(&pools.train[next_index()]);
    const Batch batch = make_batch(items, h, w);

    LossTerms terms;
    try {
      terms = compute_loss(model, batch, cfg.loss, cfg.pose_mode);
    } catch (const DomainError& e) {
      Tape::current().clear();
      throw NumericError(std::string("iteration ") + std::to_string(it) + ": " + e.what());
    }
    if (!std::isfinite(static_cast<double>(terms.photometric)))
      throw NumericError("non-finite photometric loss at iteration " + std::to_string(it));
    if (!std::isfinite(static_cast<double>(terms.smoothness)))
      throw NumericError("non-finite smoothness loss at iteration " + std::to_string(it));
    require_finite(terms.total, "total loss", it);
    backward(terms.total);
    for (const auto& p : named)
      if (p.tensor.has_grad() && !all_finite(p.tensor.grad()))
        throw NumericError("non-finite gradient of " + p.name + " at iteration " + std::to_string(it));
    opt.step();
    opt.zero_grad();
    for (const auto& p : named) require_finite(p.tensor, "parameter " + p.name, it);

    result.trace.push_back({it, terms.total.item(), terms.photometric, terms.smoothness});
    if (it % 50 == 0 || it + 1 == cfg.iterations)
      log << "iter " << it << " loss " << fmt("%.6f", terms.total.item()) << " (photometric "
          << fmt("%.6f", terms.photometric) << ", smoothness " << fmt("%.6f", terms.smoothness) << ")\n";
  }

  result.learned_scales = learned_scales(model);
  result.metrics = evaluate(model, pools.val, cfg.metrics);
  save_checkpoint(model, dir + "/model.ckpt");
  write_text_file(dir + "/loss_trace.csv", loss_trace_text(result.trace));
  write_text_file(dir + "/metrics.csv", metrics_csv(result.metrics));
  write_text_file(dir + "/metrics.txt", result.metrics.to_table("validation"));
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << result.metrics.to_table("validation");
  return result;
}

}  // namespace

Batch make_batch(const std::vector<const SceneSample*>& samples, std::int64_t h, std::int64_t w) {
  if (samples.empty()) throw ContractError("make_batch: no samples");
  NoGradGuard guard;
  Batch b;
  std::vector<Tensor> targets;
  std::array<std::vector<Tensor>, 2> sources;
  for (const auto* s : samples) {
    targets.push_back(s->target);
    for (std::size_t k = 0; k < 2; ++k) {
      sources[k].push_back(s->sources[k]);
      b.poses[k].push_back(s->poses[k]);
    }
  }
  const auto src_h = samples.front()->target.dim(1), src_w = samples.front()->target.dim(2);
  b.target = resize_to(stack_images(targets), h, w);
  for (std::size_t k = 0; k < 2; ++k) b.sources[k] = resize_to(stack_images(sources[k]), h, w);
  const Real sx = static_cast<Real>(w - 1) / static_cast<Real>(src_w - 1);
  const Real sy = static_cast<Real>(h - 1) / static_cast<Real>(src_h - 1);
  b.K = (src_h == h && src_w == w) ? samples.front()->K : samples.front()->K.scaled(sx, sy);
  return b;
}

LossTerms compute_loss(const DaCCNModel& model, const Batch& batch, const LossConfig& loss, PoseMode pose_mode) {
  const auto& mc = model.config();
  const auto h = batch.target.dim(2), w = batch.target.dim(3);
  const auto disparities = model.predict_disparities(batch.target);

  std::array<PoseTensors, 2> poses;
  for (std::size_t k = 0; k < 2; ++k)
    poses[k] = pose_mode == PoseMode::ground_truth
                   ? PoseTensors::from_transforms(batch.poses[k])
                   : model.predict_pose(concat({batch.target, batch.sources[k]}, 1));

  std::vector<Tensor> photometric, smoothness;
  LossTerms terms;
  for (const auto& disp : disparities) {
    const DepthMap depth = disparity_to_depth(resize_to(disp, h, w), mc.d_min, mc.d_max);
    std::vector<SynthesizedView> views;
    for (std::size_t k = 0; k < 2; ++k) {
      const WarpResult warped = warp_image(batch.sources[k], depth, poses[k], batch.K);
      views.push_back({warped.image, warped.valid_mask});
    }
    photometric.push_back(photometric_loss(views, batch.target, loss));
    Tensor image;
    {
      NoGradGuard guard;
      image = resize_to(batch.target, disp.dim(2), disp.dim(3));
    }
    smoothness.push_back(smoothness_loss(disp, image));
    terms.photometric += photometric.back().item();
    terms.smoothness += smoothness.back().item();
  }
  const auto n = static_cast<Real>(disparities.size());
  terms.photometric /= n;
  terms.smoothness /= n;
  terms.total = total_loss(photometric, smoothness, loss);
  return terms;
}

Tensor predict_depth(const DaCCNModel& model, const Tensor& images, std::int64_t h, std::int64_t w) {
  NoGradGuard guard;
  const auto& mc = model.config();
  const Tensor finest = model.predict_disparities(images).back();
  return disparity_to_depth(resize_to(finest, h, w), mc.d_min, mc.d_max).values;
}

MetricsReport evaluate(const DaCCNModel& model, const std::vector<SceneSample>& samples, const MetricsOptions& options) {
  if (samples.empty()) throw DegenerateError("evaluate: no samples");
  std::vector<MetricsReport> reports;
  const auto& mc = model.config();
  for (const auto& s : samples) {
    const Batch b = make_batch({&s}, mc.input_h, mc.input_w);
    const Tensor& gt = s.gt_depth.values;
    const Tensor pred = predict_depth(model, b.target, gt.dim(2), gt.dim(3));
    reports.push_back(depth_metrics(pred, gt, Tensor(), options));
  }
  return mean_report(reports);
}

std::pair<double, double> loss_window_means(const std::vector<LossRecord>& trace, std::size_t window) {
  if (trace.empty()) throw DegenerateError("loss_window_means: empty trace");
  const std::size_t k = std::min(window, trace.size());
  double first = 0, last = 0;
  for (std::size_t i = 0; i < k; ++i) {
    first += trace[i].total;
    last += trace[trace.size() - k + i].total;
  }
  return {first / static_cast<double>(k), last / static_cast<double>(k)};
}

std::string loss_trace_text(const std::vector<LossRecord>& trace) {
  std::string out = "iteration,loss,photometric,smoothness\n";
  char buf[128];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.iteration, r.total, r.photometric, r.smoothness);
    out += buf;
  }
  return out;
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  kernels::set_num_threads(cfg.threads);
  const Pools pools = generate_pools(cfg, log);
  return train_on(cfg, pools, log);
}

MetricsReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const EvalOptions& options,
                       std::ostream& log) {
  cfg.validate();
  kernels::set_num_threads(cfg.threads);
  const DaCCNModel model = load_checkpoint(checkpoint);
  const auto& mc = model.config();
  if (mc.input_h != cfg.model.input_h || mc.input_w != cfg.model.input_w)
    throw CheckpointError(checkpoint + ": model input " + std::to_string(mc.input_h) + "x" +
                          std::to_string(mc.input_w) + " does not match the config's " +
                          std::to_string(cfg.model.input_h) + "x" + std::to_string(cfg.model.input_w));
  const SceneDataset ds(cfg.scene, cfg.dataset_size, cfg.seed);
  std::vector<SceneSample> val;
  for (auto i : ds.validation_indices()) val.push_back(ds.sample(i));

  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);
  std::vector<MetricsReport> reports;
  for (std::size_t k = 0; k < val.size(); ++k) {
    const auto& s = val[k];
    const Tensor& gt = s.gt_depth.values;
    const Tensor pred = options.oracle
                            ? gt
                            : predict_depth(model, make_batch({&s}, mc.input_h, mc.input_w).target, gt.dim(2),
                                            gt.dim(3));
    reports.push_back(depth_metrics(pred, gt, Tensor(), cfg.metrics));
    if (static_cast<int>(k) < options.dump_count) {
      const std::string stem = dir + "/sample_" + std::to_string(k);
      write_ppm(stem + "_image.ppm", s.target);
      write_pfm(stem + "_pred.pfm", pred);
      write_pfm(stem + "_gt.pfm", gt);
    }
  }
  const MetricsReport m = mean_report(reports);
  write_text_file(dir + "/eval_metrics.csv", metrics_csv(m));
  write_text_file(dir + "/eval_metrics.txt", m.to_table(options.oracle ? "oracle" : "validation"));
  log << m.to_table(options.oracle ? "oracle" : "validation");
  return m;
}

std::vector<StretchRow> cmd_stretch_experiment(const RunConfig& base, std::ostream& log) {
  base.validate();
  kernels::set_num_threads(base.threads);
  const Pools pools = generate_pools(base, log);
  struct Variant {
    const char* name;
    int fh, fw;
  };
  const Variant variants[] = {{"original", 1, 1}, {"horizontal", 1, 2}, {"vertical", 2, 1}, {"equal", 2, 2}};
  std::vector<StretchRow> rows;
  for (const auto& v : variants) {
    RunConfig cfg = base;
    cfg.model.input_h = base.model.input_h * v.fh;
    cfg.model.input_w = base.model.input_w * v.fw;
    cfg.output_dir = base.output_dir + "/" + v.name;
    log << "== stretch " << v.name << " (" << cfg.model.input_h << "x" << cfg.model.input_w << ")\n";
    const TrainResult r = train_on(cfg, pools, log);
    rows.push_back({v.name, cfg.model.input_h, cfg.model.input_w, r.metrics, DaCCNModel::conv_macs(cfg.model)});
  }
  const std::string table = format_stretch_table(rows);
  write_text_file(base.output_dir + "/stretch_table.txt", table);
  log << table;
  return rows;
}

std::string format_stretch_table(const std::vector<StretchRow>& rows) {
  std::string out = "Input-ratio experiment (synthetic scenes, desk scale; methodology only, not the published numbers)\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-10s %8s %8s %14s %7s\n", "setting", "input", "AbsRel", "RMSE", "MACs/forward",
                "ratio");
  out += buf;
  const double base = rows.empty() ? 1 : static_cast<double>(rows.front().macs);
  for (const auto& r : rows) {
    const std::string input = std::to_string(r.input_h) + "x" + std::to_string(r.input_w);
    std::snprintf(buf, sizeof buf, "%-12s %-10s %8.4f %8.4f %14lld %7.2f\n", r.setting.c_str(), input.c_str(),
                  r.metrics.abs_rel, r.metrics.rmse, static_cast<long long>(r.macs), static_cast<double>(r.macs) / base);
    out += buf;
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& base, std::ostream& log) {
  base.validate();
  kernels::set_num_threads(base.threads);
  const Pools pools = generate_pools(base, log);
  struct Variant {
    const char* name;
    bool dam, cc;
  };
  const Variant variants[] = {{"baseline", false, false}, {"DaM", true, false}, {"CC", false, true}, {"DaM+CC", true, true}};
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    RunConfig cfg = base;
    cfg.model.enable_dam = v.dam;
    cfg.model.enable_cc = v.cc;
    cfg.output_dir = base.output_dir + "/" + (std::string(v.name) == "DaM+CC" ? "dam_cc" : v.name);
    log << "== ablation " << v.name << "\n";
    const TrainResult r = train_on(cfg, pools, log);
    rows.push_back({v.name, v.dam, v.cc, r.metrics, v.dam ? r.learned_scales : std::vector<std::pair<Real, Real>>{}});
  }
  const std::string table = format_ablation_table(rows);
  write_text_file(base.output_dir + "/ablation_table.txt", table);
  log << table;
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "Ablation (synthetic scenes, desk scale; methodology only, not the published numbers)\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %5s %5s %8s %8s %8s\n", "setting", "DaM", "CC", "AbsRel", "RMSE", "d<1.25");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %5s %5s %8.4f %8.4f %8.4f\n", r.setting.c_str(), r.dam ? "yes" : "-",
                  r.cc ? "yes" : "-", r.metrics.abs_rel, r.metrics.rmse, r.metrics.delta1);
    out += buf;
  }
  for (const auto& r : rows) {
    if (r.learned_scales.empty()) continue;
    out += "learned scales (" + r.setting + "):";
    for (std::size_t b = 0; b < r.learned_scales.size(); ++b)
      out += " b" + std::to_string(b) + "=(" + fmt("%.4f", r.learned_scales[b].first) + "," +
             fmt("%.4f", r.learned_scales[b].second) + ")";
    out += "\n";
  }
  return out;
}

}  // namespace daccn
