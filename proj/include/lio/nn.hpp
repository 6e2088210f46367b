#pragma once

#include <vector>

#include "lio/rng.hpp"
#include "lio/tensor.hpp"

namespace lio {

/// Affine layer y = x W + b with x as rows.
struct Linear {
  Tensor W;  // [in, out]
  Tensor b;  // [1, out]

  Tensor forward(const Tensor& x) const;
  int in_dim() const { return W.rows(); }
  int out_dim() const { return W.cols(); }
};

/// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero bias.
Linear make_linear(Rng& rng, int in, int out, bool trainable = true);
/// All-zero weights and bias (used where the initial map must vanish).
Linear make_linear_zero(int in, int out, bool trainable = true);

/// Plain MLP: ReLU on hidden layers, linear output.
struct Mlp {
  std::vector<Linear> layers;

  Tensor forward(const Tensor& x) const;
  std::vector<Tensor> params() const;
};

/// widths = {in, hidden..., out}; zero_last zero-initializes the final layer.
Mlp make_mlp(Rng& rng, const std::vector<int>& widths, bool zero_last = false,
             bool trainable = true);

}  // namespace lio
