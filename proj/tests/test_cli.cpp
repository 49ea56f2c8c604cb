#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "daccn/config.hpp"
#include "daccn/image_io.hpp"
#include "daccn/model.hpp"
#include "daccn/synthdata.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace daccn;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "daccn_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run(const std::string& args, const std::string& log_name = "last.log") {
  const std::string cmd = std::string(DACCN_CLI_PATH) + " " + args + " > " + (work_dir() / log_name).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A config small enough for a few seconds of training.
fs::path tiny_config() {
  const fs::path p = work_dir() / "tiny.json";
  if (!fs::exists(p))
    write_file(p, R"({
  "iterations": 3,
  "dataset_size": 4,
  "model": {"input_h": 32, "input_w": 48, "branch_channels": [4, 4, 6, 6]},
  "scene": {"image_h": 32, "image_w": 48, "supersample": 1}
})");
  return p;
}

std::string train_tiny(const std::string& name, const std::string& extra = "") {
  const fs::path out = work_dir() / name;
  EXPECT_EQ(run("train -c " + tiny_config().string() + " -o " + out.string() + " " + extra, name + ".log"), 0)
      << read_file(work_dir() / (name + ".log"));
  return out.string();
}

}  // namespace

TEST(Cli, DefaultsDumpParsesBackToDefaults) {
  ASSERT_EQ(run("defaults", "defaults.json"), 0);
  const auto text = read_file(work_dir() / "defaults.json");
  const RunConfig parsed = run_config_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(to_json(parsed).dump(), to_json(RunConfig{}).dump());
  EXPECT_EQ(parsed.iterations, 500);
  EXPECT_EQ(parsed.optimizer.lr, 1e-4);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  const fs::path bad = work_dir() / "bad.json";
  write_file(bad, R"({"model": {"input_h": 33}})");
  EXPECT_EQ(run("train -c " + bad.string()), 2);
  write_file(bad, R"({"no_such_key": 1})");
  EXPECT_EQ(run("train -c " + bad.string()), 2);
  write_file(bad, "{ not json");
  EXPECT_EQ(run("train -c " + bad.string()), 2);
  EXPECT_EQ(run("train -c " + tiny_config().string() + " --set loss.alpha=3"), 2);
}

TEST(Cli, NonFiniteTrainingIsNumericFailure) {
  const fs::path out = work_dir() / "nan_run";
  EXPECT_EQ(run("train -c " + tiny_config().string() + " -o " + out.string() + " --set optimizer.lr=1e300", "nan.log"),
            3)
      << read_file(work_dir() / "nan.log");
}

TEST(Cli, GradcheckPassesAndNegativeControlFails) {
  ASSERT_EQ(run("gradcheck", "grad.log"), 0);
  const auto table = read_file(work_dir() / "grad.log");
  for (const char* op : {"conv2d", "bilinear_sample.grid", "cumulative_convolution", "direction_aware_block.log_scales",
                         "ssim", "photometric_loss", "smoothness_loss", "warp_image.depth"})
    EXPECT_NE(table.find(op), std::string::npos) << op;
  EXPECT_NE(table.find("max_rel_err"), std::string::npos);
  EXPECT_NE(table.find("tolerance"), std::string::npos);
  EXPECT_EQ(table.find("FAIL"), std::string::npos);

  EXPECT_EQ(run("gradcheck --inject-fault", "grad_fault.log"), 4);
  const auto faulty = read_file(work_dir() / "grad_fault.log");
  const auto line_start = faulty.find("faulty_square");
  ASSERT_NE(line_start, std::string::npos);
  EXPECT_NE(faulty.substr(line_start, faulty.find('\n', line_start) - line_start).find("FAIL"), std::string::npos);
}

TEST(Cli, ZeroIterationCheckpointEqualsInitialization) {
  const std::string out = train_tiny("zero", "--iterations 0");
  const DaCCNModel saved = load_checkpoint(out + "/model.ckpt");
  const DaCCNModel init(saved.config());
  const auto a = saved.all_parameters(), b = init.all_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto va = a[k].tensor.values(), vb = b[k].tensor.values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin(), vb.end())) << a[k].name;
  }
  EXPECT_EQ(read_file(out + "/loss_trace.csv"), "iteration,loss,photometric,smoothness\n");
}

TEST(Cli, TrainingIsByteReproducible) {
  const std::string a = train_tiny("rep_a"), b = train_tiny("rep_b");
  for (const char* f : {"loss_trace.csv", "metrics.csv", "metrics.txt", "model.ckpt"})
    EXPECT_EQ(read_file(a + "/" + f), read_file(b + "/" + f)) << f;
  std::istringstream trace(read_file(a + "/loss_trace.csv"));
  std::string line;
  int rows = 0;
  std::getline(trace, line);
  EXPECT_EQ(line, "iteration,loss,photometric,smoothness");
  while (std::getline(trace, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Cli, EvalReproducesTrainMetricsAndOracleIsPerfect) {
  const std::string out = train_tiny("evalrun");
  const fs::path eval_dir = work_dir() / "evalrun_eval";
  ASSERT_EQ(run("eval -c " + tiny_config().string() + " -o " + eval_dir.string() + " " + out + "/model.ckpt --dump 2",
                "eval.log"),
            0)
      << read_file(work_dir() / "eval.log");
  EXPECT_EQ(read_file(eval_dir / "eval_metrics.csv"), read_file(out + "/metrics.csv"));

  const fs::path oracle_dir = work_dir() / "oracle";
  ASSERT_EQ(run("eval --oracle -c " + tiny_config().string() + " -o " + oracle_dir.string() + " " + out + "/model.ckpt"),
            0);
  std::istringstream csv(read_file(oracle_dir / "eval_metrics.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(row.rfind("0,0,0,0,1,1,1,", 0), 0u) << row;

  // The dumped ground truth reloads to the exact float32 values of the generated depth.
  const RunConfig cfg = load_run_config(tiny_config().string(), {});
  const SceneDataset ds(cfg.scene, cfg.dataset_size, cfg.seed);
  const Tensor gt = ds.sample(ds.validation_indices()[0]).gt_depth.values;
  const Tensor back = read_pfm((eval_dir / "sample_0_gt.pfm").string());
  ASSERT_EQ(back.shape(), gt.shape());
  for (std::int64_t k = 0; k < gt.numel(); ++k)
    EXPECT_EQ(static_cast<float>(back.values()[k]), static_cast<float>(gt.values()[k]));
  const Tensor pred = read_pfm((eval_dir / "sample_0_pred.pfm").string());
  write_pfm((work_dir() / "again.pfm").string(), pred);
  EXPECT_EQ(read_file(work_dir() / "again.pfm"), read_file(eval_dir / "sample_0_pred.pfm"));
  EXPECT_TRUE(fs::exists(eval_dir / "sample_1_image.ppm"));
}

TEST(Cli, EvalRejectsMismatchedCheckpoint) {
  const std::string out = train_tiny("mismatch", "--iterations 0");
  EXPECT_NE(run("eval " + out + "/model.ckpt"), 0);
}

TEST(ImageIo, PpmRoundTripAtEightBits) {
  std::vector<Real> v(3 * 4 * 5);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<Real>(k % 256) / 255;
  const Tensor img = Tensor::from_values({3, 4, 5}, v);
  const auto p = work_dir() / "x.ppm";
  write_ppm(p.string(), img);
  const Tensor back = read_ppm(p.string());
  EXPECT_EQ(back.shape(), img.shape());
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(back.values()[k], v[k]);
  EXPECT_EQ(read_file(p).substr(0, 11), "P6\n5 4\n255\n");
}

TEST(ImageIo, PfmLayout) {
  const Tensor m = Tensor::from_values({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6.5});
  const auto p = work_dir() / "x.pfm";
  write_pfm(p.string(), m);
  const std::string bytes = read_file(p);
  ASSERT_EQ(bytes.substr(0, 11), "Pf\n3 2\n-1.0");
  // Bottom row first, little-endian float32.
  float first = 0;
  std::memcpy(&first, bytes.data() + bytes.size() - 24, 4);
  EXPECT_EQ(first, 4.0f);
  const Tensor back = read_pfm(p.string());
  EXPECT_EQ(back.at({0, 0, 1, 2}), 6.5);
  EXPECT_EQ(back.at({0, 0, 0, 0}), 1);
}
