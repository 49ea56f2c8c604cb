// daccn: train, evaluate, gradient-check and run the experiment tables.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "daccn/commands.hpp"
#include "daccn/config.hpp"
#include "daccn/errors.hpp"
#include "daccn/gradcheck_suite.hpp"

using namespace daccn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::int64_t seed = -1;
  int iterations = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "JSON run config (defaults when omitted)")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.overrides, "Override a config key, e.g. --set optimizer.lr=3e-4 (repeatable)");
  cmd->add_option("-o,--output", a.output_dir, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", a.seed, "Master seed (overrides seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--iterations", a.iterations, "Training iterations (overrides iterations)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", a.threads, "OpenMP threads (overrides threads)")->check(CLI::PositiveNumber);
}

RunConfig resolve(const CommonArgs& a) {
  std::vector<std::string> overrides = a.overrides;
  if (!a.output_dir.empty()) overrides.push_back("output_dir=\"" + a.output_dir + "\"");
  if (a.seed >= 0) overrides.push_back("seed=" + std::to_string(a.seed));
  if (a.iterations >= 0) overrides.push_back("iterations=" + std::to_string(a.iterations));
  if (a.threads > 0) overrides.push_back("threads=" + std::to_string(a.threads));
  return load_run_config(a.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DaCCN desk-scale monocular depth: direction-aware module and cumulative convolution"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, stretch_args, ablate_args;
  auto* train = app.add_subcommand("train", "Self-supervised training on generated scenes, then validation metrics");
  add_common(train, train_args);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the validation split");
  add_common(eval, eval_args);
  std::string checkpoint;
  EvalOptions eval_opts;
  eval->add_option("checkpoint", checkpoint, "Checkpoint file written by train")->required()->check(CLI::ExistingFile);
  eval->add_flag("--oracle", eval_opts.oracle, "Use ground truth as the prediction");
  eval->add_option("--dump", eval_opts.dump_count, "Write PPM/PFM files for the first N samples")
      ->check(CLI::NonNegativeNumber);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every registered differentiable op");
  bool inject_fault = false;
  grad->add_flag("--inject-fault", inject_fault, "Append an op with a deliberately wrong backward rule");

  auto* stretch = app.add_subcommand("stretch", "Input-ratio experiment: original, horizontal, vertical, equal stretch");
  add_common(stretch, stretch_args);
  auto* ablate = app.add_subcommand("ablate", "Ablation over the direction-aware module and cumulative convolution");
  add_common(ablate, ablate_args);
  app.add_subcommand("defaults", "Print the default config with every accepted key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("defaults")) {
      std::cout << default_config_text();
    } else if (train->parsed()) {
      const TrainResult r = cmd_train(resolve(train_args), std::cout);
      std::cout << "trained " << r.trace.size() << " iterations in " << r.seconds << " s\n";
    } else if (eval->parsed()) {
      cmd_eval(resolve(eval_args), checkpoint, eval_opts, std::cout);
    } else if (grad->parsed()) {
      const auto rows = run_gradcheck(gradcheck_cases(inject_fault));
      std::cout << format_gradcheck_table(rows);
      for (const auto& r : rows)
        if (!r.passed) return kExitGradcheck;
    } else if (stretch->parsed()) {
      cmd_stretch_experiment(resolve(stretch_args), std::cout);
    } else if (ablate->parsed()) {
      cmd_ablate(resolve(ablate_args), std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOk;
}
