#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lio/datagen.hpp"
#include "lio/trainer.hpp"

namespace lio {

/// Evaluation-side settings: structure-check sample counts and thresholds,
/// sweep grids, and the error gates each subcommand enforces for its exit
/// code.
struct EvalConfig {
  int triplet_samples = 2000;
  double identity_min = 0.999;
  double associativity_min = 0.98;
  double invertibility_min = 0.97;
  double main_error_max = 6.0;

  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3};
  int sweep_epochs = 150;
  std::vector<int> noisy_levels = {0, 1, 2, 3, 4, 5};
  double noisy_gated_max = 15.0;
  std::vector<int> redundant_levels = {2, 4, 6, 8};
  double redundant_max = 12.0;
  std::vector<int> incomplete_levels = {1, 2, 3, 4, 5, 6, 7};
  int incomplete_compare_level = 4;
  int incomplete_n_train = 25;  // all-pairs contrast is quadratic in domains
  std::vector<int> domain_counts = {5, 10, 20, 30, 50, 70, 100};
  double count20_max = 15.0;
  double count50_max = 10.0;
  double spearman_max = -0.8;
  int manifold_mesh = 21;
};

/// Everything a run needs, grouped the way the config file is: dataset,
/// arch (folded into the train fields), train, eval, plus the output root.
struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  std::string output_dir = "out";
};

/// Flat view of a parsed config file: dotted block path -> value tokens.
using ConfigMap = std::map<std::string, std::vector<std::string>>;

/// Nested-block text surface:  name { key = v1 v2 ... }  with # comments.
ConfigMap parse_config_text(const std::string& text);

/// JSON surface for the same schema (objects nest, arrays hold scalars).
ConfigMap parse_config_json(const std::string& text);

/// Apply a parsed map over the defaults.  Unknown keys, wrong arity, and
/// unparsable values raise ArgumentError naming the key.
ExperimentConfig config_from_map(const ConfigMap& map);

/// Read a config file; a leading '{' selects the JSON surface.
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical text with every default materialized.  Parsing it back yields
/// an identical config; its bytes define the config hash.
std::string resolved_config_text(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

/// 16 lowercase hex digits of fnv1a64(resolved_config_text(cfg)).
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace lio
