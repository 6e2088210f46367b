#pragma once

#include <map>
#include <string>
#include <vector>

#include "lio/nn.hpp"
#include "lio/rng.hpp"
#include "lio/tensor.hpp"

namespace lio {

/// Architecture of the per-domain classifier g(.; theta): an MLP over 2-d
/// inputs emitting class logits.
struct PredictorArch {
  std::vector<int> widths = {2, 50, 50, 2};

  /// Exact total parameter count D: sum over layers of in*out + out.
  int param_count() const;
  bool operator==(const PredictorArch&) const = default;
};

/// Flattened parameters theta in R^D for one domain, kept as a [1, D] tensor.
/// Flattening order: layer by layer from the input side, weights row-major,
/// then bias.
struct ParamVector {
  Tensor theta;
  int domain_id = -1;
};

/// Trainable per-domain parameter vectors, training domains only.
struct ParamStore {
  PredictorArch arch;
  std::map<int, ParamVector> by_domain;

  const ParamVector& at(int domain_id) const;
  std::vector<int> ids() const;
};

/// Forward pass through the unflattened layers; differentiable with respect
/// to theta (a [1,D] row, possibly an interior graph node) and inputs.
Tensor predict(const PredictorArch& arch, const Tensor& theta, const Tensor& inputs);

/// Mean softmax cross-entropy of logits against labels in {0,1}.
Tensor loss_pred(const Tensor& logits, const std::vector<int>& labels);

/// 100 * fraction of rows whose argmax (ties toward class 0) differs from the
/// label.
double error_rate(const Tensor& logits, const std::vector<int>& labels);

/// Pack layer weights into a [1, D] row in flattening order.
Tensor flatten_params(const PredictorArch& arch, const std::vector<Linear>& layers,
                      bool trainable = false);
/// Inverse of flatten_params (values only, detached from any graph).
std::vector<Linear> unflatten_params(const PredictorArch& arch, const Tensor& theta);

/// One shared random draw used to initialize every training domain's theta.
Tensor init_theta(const PredictorArch& arch, Rng& rng);

/// Checkpoint: one CSV per domain under dir, key/value rows carrying an arch
/// descriptor header followed by theta values in flattening order.
void save_param_store(const ParamStore& store, const std::string& dir);
ParamStore load_param_store(const std::string& dir);

}  // namespace lio
