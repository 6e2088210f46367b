#include "lio/nn.hpp"

#include <cmath>

#include "lio/errors.hpp"

namespace lio {

Tensor Linear::forward(const Tensor& x) const {
  return add_rowvec(matmul(x, W), b);
}

Linear make_linear(Rng& rng, int in, int out, bool trainable) {
  if (in < 1 || out < 1) throw ArgumentError("make_linear: widths must be positive");
  double limit = std::sqrt(6.0 / (in + out));
  std::vector<double> w(static_cast<std::size_t>(in) * out);
  for (double& v : w) v = rng.uniform(-limit, limit);
  Linear l;
  l.W = Tensor::from_values({in, out}, std::move(w), trainable);
  l.b = Tensor::zeros({1, out}, trainable);
  return l;
}

Linear make_linear_zero(int in, int out, bool trainable) {
  if (in < 1 || out < 1) throw ArgumentError("make_linear_zero: widths must be positive");
  Linear l;
  l.W = Tensor::zeros({in, out}, trainable);
  l.b = Tensor::zeros({1, out}, trainable);
  return l;
}

Tensor Mlp::forward(const Tensor& x) const {
  if (layers.empty()) throw StateError("Mlp::forward: no layers");
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

std::vector<Tensor> Mlp::params() const {
  std::vector<Tensor> out;
  out.reserve(layers.size() * 2);
  for (const auto& l : layers) {
    out.push_back(l.W);
    out.push_back(l.b);
  }
  return out;
}

Mlp make_mlp(Rng& rng, const std::vector<int>& widths, bool zero_last, bool trainable) {
  if (widths.size() < 2) throw ArgumentError("make_mlp: need at least in and out widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    bool last = i + 2 == widths.size();
    if (last && zero_last)
      m.layers.push_back(make_linear_zero(widths[i], widths[i + 1], trainable));
    else
      m.layers.push_back(make_linear(rng, widths[i], widths[i + 1], trainable));
  }
  return m;
}

}  // namespace lio
