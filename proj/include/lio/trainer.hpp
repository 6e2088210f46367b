#pragma once

#include <string>
#include <vector>

#include "lio/datagen.hpp"
#include "lio/predictor.hpp"
#include "lio/transport.hpp"

namespace lio {

/// Per-epoch loss components (unweighted) and the weighted total.
struct LossBreakdown {
  double pred_self = 0.0;
  double recon = 0.0;
  double pred_cross = 0.0;
  double consist = 0.0;
  double embed = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double pred_self = 1.0;
  double recon = 1.0;
  double pred_cross = 1.0;
  double consist = 1.0;
  double embed = 1.0;
};

struct TrainConfig {
  int epochs = 300;
  int minibatch_domains = 10;
  double learning_rate = 1e-3;
  int k = 5;  // chart size; clamped to n_train - 1 when fewer domains
  LossWeights weights;
  std::uint64_t seed = 1;
  OperatorVariant variant;

  PredictorArch arch;
  int m = 32;
  int B = 2;
  std::vector<int> encoder_hidden = {1024, 512, 128};
  int field_hidden = 32;
  std::vector<int> plain_hidden = {64, 64};
};

struct TrainedState {
  ParamStore store;
  TransportOperator op;
  std::vector<LossBreakdown> history;
  std::vector<int> train_ids;          // domain ids in training order
  std::vector<Descriptor> train_descriptors;  // aligned with train_ids
};

/// Joint training of per-domain parameters, autoencoder, transport fields,
/// coefficient map, and gate, per minibatch of domain indices with one Adam
/// step each.  Aborts with a NumericError naming the first non-finite loss
/// component.
TrainedState train(const std::vector<Domain>& domains, const TrainConfig& config);

/// Parameters for an unseen descriptor: nearest training descriptor by
/// Euclidean distance (ties toward the lower id), gate by that source,
/// transport its latent, decode.  Pure function of the trained state.
Tensor infer(const Descriptor& z_s, const TrainedState& state);

/// loss_history.csv: epoch, five components, total.  One row per epoch.
void save_loss_history(const std::vector<LossBreakdown>& history,
                       const std::string& path);

}  // namespace lio
