#pragma once

#include <vector>

#include "lio/datagen.hpp"
#include "lio/predictor.hpp"

namespace lio {

struct BaselineConfig {
  PredictorArch arch;        // the same classifier family as the main model
  int steps = 1500;          // full-batch Adam steps
  int nda_finetune_steps = 100;
  double learning_rate = 1e-3;
  int z_encoder_width = 16;  // ERM-D descriptor encoder: d -> 16 -> 16
  std::uint64_t seed = 1;
};

/// One predictor fit on the pooled data of all training domains; descriptors
/// ignored.
struct ErmModel {
  PredictorArch arch;
  Tensor theta;
};
ErmModel train_erm(const std::vector<Domain>& domains, const BaselineConfig& cfg);
double evaluate_erm(const ErmModel& model, const std::vector<const Domain*>& test);

/// Descriptor-conditioned variant: the classifier body doubles as a feature
/// extractor, z runs through a small encoder, and a linear head scores the
/// feature vector with the descriptor code appended.
struct ErmDModel {
  Mlp body;       // input -> features, ReLU on every layer
  Mlp z_encoder;  // descriptor -> code
  Mlp head;       // [features; code] -> logits
};
ErmDModel train_erm_d(const std::vector<Domain>& domains, const BaselineConfig& cfg);
double evaluate_erm_d(const ErmDModel& model, const std::vector<const Domain*>& test);

/// Global ERM fit, then a per-domain fine-tuned copy; a test descriptor uses
/// its nearest training domain's copy.  Sanity baseline only.
struct NdaModel {
  PredictorArch arch;
  std::vector<Descriptor> train_descriptors;
  std::vector<Tensor> thetas;  // aligned with train_descriptors
};
NdaModel train_nda(const std::vector<Domain>& domains, const BaselineConfig& cfg);
double evaluate_nda(const NdaModel& model, const std::vector<const Domain*>& test);

}  // namespace lio
