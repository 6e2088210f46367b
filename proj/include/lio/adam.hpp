#pragma once

#include <vector>

#include "lio/tensor.hpp"

namespace lio {

/// Moment buffers for one flat parameter block.
struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long step = 0;
};

/// One Adam update with bias correction, in place on `params`.
/// params and grads must have equal length; state buffers are sized on first use.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr = 1e-3, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Optimizer over a fixed list of leaf tensors.  Registration order is part
/// of the deterministic update sequence, so callers register in a fixed order.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void add_param(const Tensor& t);
  void add_params(const std::vector<Tensor>& ts);

  /// Apply one step from the tensors' accumulated grads, then leave grads as-is
  /// (callers pair with zero_grad()).
  void step();
  void zero_grad();

  std::size_t param_count() const { return params_.size(); }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace lio
