#include "lio/adam.hpp"

#include <cmath>

#include "lio/errors.hpp"

namespace lio {

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw DimensionError("adam_step: params/grads size mismatch");
  if (state.m.empty()) state.m.assign(params.size(), 0.0);
  if (state.v.empty()) state.v.assign(params.size(), 0.0);
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: state size mismatch");
  state.step += 1;
  double b1t = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double b2t = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  std::size_t n = params.size();
  for (std::size_t i = 0; i < n; ++i) {
    double g = grads[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    double mhat = state.m[i] / b1t;
    double vhat = state.v[i] / b2t;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void Adam::add_param(const Tensor& t) {
  if (!t.defined()) throw StateError("Adam::add_param: undefined tensor");
  if (!t.requires_grad())
    throw ArgumentError("Adam::add_param: tensor does not require grad");
  params_.push_back(t);
  states_.emplace_back();
}

void Adam::add_params(const std::vector<Tensor>& ts) {
  for (const auto& t : ts) add_param(t);
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto node = params_[i].node();
    node->ensure_grad();
    adam_step(node->value, node->grad, states_[i], lr_, beta1_, beta2_, eps_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace lio
