#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "lio/baselines.hpp"
#include "lio/datagen.hpp"
#include "lio/trainer.hpp"

namespace lio {

/// Mean cosine similarities of the operator's algebraic properties, measured
/// on decoded parameter vectors at test descriptors.
struct StructureReport {
  double identity_cos = 0.0;
  double associativity_cos = 0.0;
  double invertibility_cos = 0.0;
  int identity_n = 0;
  int associativity_n = 0;
  int invertibility_n = 0;
};

/// Same three properties measured in latent space (diagnostic only).
struct LatentStructureDiag {
  double identity_cos = 0.0;
  double associativity_cos = 0.0;
  double invertibility_cos = 0.0;
};

/// Mean error rate (%) over test domains: infer parameters per descriptor,
/// score each domain, average unweighted.
double evaluate(const std::vector<const Domain*>& test_domains,
                const TrainedState& state);

/// Error of each training domain under its own stored parameters, averaged.
double oracle_train_error(const std::vector<Domain>& train_domains,
                          const TrainedState& state);

/// Identity, associativity (sampled triplets), and invertibility (sampled
/// round-trip pairs) cosines over inferred parameters at the test
/// descriptors.  Sampling is seeded and independent of descriptor order.
StructureReport verify_structure(const std::vector<Descriptor>& test_descriptors,
                                 const TrainedState& state, int triplet_samples,
                                 std::uint64_t sample_seed = 9001,
                                 LatentStructureDiag* latent_diag = nullptr);

struct SweepRow {
  double level = 0.0;
  std::string variant;
  std::uint64_t seed = 0;
  double error = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;

  std::vector<double> levels() const;
  /// Mean error across seeds at one (level, variant) cell.
  double mean_error(double level, const std::string& variant) const;
  double stddev_error(double level, const std::string& variant) const;
};

/// Everything needed to retrain at a sweep point.
struct SweepRunParams {
  DatasetConfig dataset;  // counts/bounds template; seeds overridden per run
  TrainConfig train;
  std::vector<std::uint64_t> seeds;  // one retrain per seed per point
};

/// Error after retraining at one imperfection level.  `ablated` switches the
/// contrast variant on (no_gate for noisy/redundant, no_chart for
/// incomplete).
double imperfection_point(ImperfectionKind kind, int level, bool ablated,
                          std::uint64_t seed, const SweepRunParams& params);

/// Full curve: per level and seed, retrain both the primary variant and its
/// contrast and record errors.  Variants are named gated/ungated for noisy
/// and redundant, charted/uncharted for incomplete.
SweepResult imperfection_sweep(ImperfectionKind kind, const std::vector<int>& levels,
                               const SweepRunParams& params, bool run_primary = true,
                               bool run_ablated = true);

double domain_count_point(int count, std::uint64_t seed, const SweepRunParams& params);

/// Retrain per training-domain count on fresh uniform descriptor samples,
/// always evaluating on the fixed mesh.
SweepResult domain_count_sweep(const std::vector<int>& counts,
                               const SweepRunParams& params);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ManifoldExport {
  std::vector<Descriptor> descriptors;
  Tensor projected;      // [n, 3]
  Tensor components;     // [3, D]
  std::vector<double> explained_variance;
  double mean_adjacent_distance = 0.0;
  double mean_random_distance = 0.0;
};

/// Infer parameters over a mesh_per_axis x mesh_per_axis descriptor grid,
/// project them onto 3 principal components, and measure the adjacency
/// smoothness proxy (mesh neighbors vs random pairs in projected space).
ManifoldExport export_manifold(const std::vector<Descriptor>& mesh,
                               int mesh_per_axis, const TrainedState& state,
                               std::uint64_t pair_seed = 4242);

// CSV emission (config_hash repeats as the trailing column of every row).
void write_results_main(const std::string& path,
                        const std::vector<std::tuple<std::string, std::string,
                                                     std::uint64_t, double>>& rows,
                        const std::string& config_hash);
void write_structure_csv(const std::string& path, const StructureReport& r,
                         const std::string& config_hash);
void write_sweep_csv(const std::string& path, const SweepResult& r,
                     const std::string& config_hash);
void write_manifold_csv(const std::string& path, const ManifoldExport& m,
                        const std::string& config_hash);

}  // namespace lio
