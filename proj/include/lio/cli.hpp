#pragma once

#include <string>

#include "lio/config.hpp"
#include "lio/trainer.hpp"

namespace lio {

/// Parsed command line: global flags plus the per-subcommand extras.
struct CliOptions {
  std::string config_path;  // empty keeps built-in defaults
  std::string out_dir;      // --out; LIODG_OUT wins over both
  bool has_seed = false;
  std::uint64_t seed = 0;  // overrides dataset.seed and train.seed
  int jobs = 1;

  std::string dataset_dir;     // default <out>/dataset
  std::string checkpoint_dir;  // default <out>/checkpoint
  std::string imperfection;    // generate: kind:level shorthand
  std::string ablation;        // train: comma-separated variant flags
  std::string models = "full,erm,erm_d";  // eval: which models to score
  std::string kind;            // sweep: noisy|redundant|incomplete|domain_count
  std::string variants = "full,plain,no_lie";  // ablate
};

/// Config file + flag overrides, resolved output_dir included.
ExperimentConfig resolve_config(const CliOptions& opt);

/// Checkpoint directory contents written by cmd_train and read back by the
/// evaluation commands.
void save_trained_state(const TrainedState& state, const std::string& dir);
TrainedState load_trained_state(const std::string& dir);

int cmd_generate(const CliOptions& opt);
int cmd_train(const CliOptions& opt);
int cmd_eval(const CliOptions& opt);
int cmd_verify(const CliOptions& opt);
int cmd_ablate(const CliOptions& opt);
int cmd_sweep(const CliOptions& opt);
int cmd_manifold(const CliOptions& opt);
int cmd_repro(const CliOptions& opt);

/// Full argv dispatch with the documented exit codes: 0 success, 1 threshold
/// failure, 2 usage or I/O or state error, 3 numeric abort.
int run_cli(int argc, char** argv);

}  // namespace lio
