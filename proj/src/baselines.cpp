#include "lio/baselines.hpp"

#include <algorithm>

#include "lio/adam.hpp"
#include "lio/errors.hpp"
#include "lio/linalg.hpp"
#include "lio/rng.hpp"
#include "lio/transport.hpp"

namespace lio {

namespace {

void pool_domains(const std::vector<Domain>& domains, Tensor& inputs,
                  std::vector<int>& labels) {
  if (domains.empty()) throw ArgumentError("baseline: no training domains");
  std::vector<Tensor> parts;
  parts.reserve(domains.size());
  labels.clear();
  for (const auto& d : domains) {
    parts.push_back(d.inputs);
    labels.insert(labels.end(), d.labels.begin(), d.labels.end());
  }
  inputs = stack_rows(parts);
}

Tensor fit_theta(const PredictorArch& arch, const Tensor& inputs,
                 const std::vector<int>& labels, Tensor theta, int steps, double lr) {
  Adam opt(lr);
  opt.add_param(theta);
  for (int s = 0; s < steps; ++s) {
    Tensor loss = softmax_cross_entropy(predict(arch, theta, inputs), labels);
    opt.zero_grad();
    backward(loss);
    opt.step();
  }
  return theta;
}

}  // namespace

ErmModel train_erm(const std::vector<Domain>& domains, const BaselineConfig& cfg) {
  Rng rng(cfg.seed);
  Tensor pooled;
  std::vector<int> labels;
  pool_domains(domains, pooled, labels);
  Tensor theta = Tensor::from_values({1, cfg.arch.param_count()},
                                     init_theta(cfg.arch, rng).values(), true);
  ErmModel m{cfg.arch, fit_theta(cfg.arch, pooled, labels, theta, cfg.steps,
                                 cfg.learning_rate)};
  return m;
}

double evaluate_erm(const ErmModel& model, const std::vector<const Domain*>& test) {
  if (test.empty()) throw ArgumentError("evaluate_erm: empty test set");
  NoGradGuard ng;
  double acc = 0.0;
  for (const Domain* d : test)
    acc += error_rate(predict(model.arch, model.theta, d->inputs), d->labels);
  return acc / static_cast<double>(test.size());
}

ErmDModel train_erm_d(const std::vector<Domain>& domains, const BaselineConfig& cfg) {
  Rng rng(cfg.seed);
  int d = static_cast<int>(domains.at(0).descriptor.size());
  int zw = cfg.z_encoder_width;

  // The classifier body minus its logit layer serves as the feature
  // extractor; the descriptor code joins at the feature level, not the input.
  const auto& w = cfg.arch.widths;
  std::vector<int> body_w(w.begin(), w.end() - 1);

  ErmDModel m;
  m.body = make_mlp(rng, body_w);
  m.z_encoder = make_mlp(rng, {d, zw, zw});
  m.head = make_mlp(rng, {body_w.back() + zw, w.back()});

  std::vector<int> labels;
  std::vector<Tensor> ones_cols;  // per-domain [n_i, 1] for broadcasting enc(z)
  for (const auto& dom : domains) {
    labels.insert(labels.end(), dom.labels.begin(), dom.labels.end());
    ones_cols.push_back(Tensor::from_values(
        {dom.inputs.rows(), 1}, std::vector<double>(dom.inputs.rows(), 1.0)));
  }

  Adam opt(cfg.learning_rate);
  opt.add_params(m.body.params());
  opt.add_params(m.z_encoder.params());
  opt.add_params(m.head.params());

  for (int s = 0; s < cfg.steps; ++s) {
    std::vector<Tensor> rows;
    rows.reserve(domains.size());
    for (std::size_t i = 0; i < domains.size(); ++i) {
      Tensor feats = relu(m.body.forward(domains[i].inputs));
      Tensor code = m.z_encoder.forward(descriptor_row(domains[i].descriptor));
      Tensor tiled = matmul(ones_cols[i], code);  // [n_i, zw]
      rows.push_back(concat_cols({feats, tiled}));
    }
    Tensor batch = stack_rows(rows);
    Tensor loss = softmax_cross_entropy(m.head.forward(batch), labels);
    opt.zero_grad();
    backward(loss);
    opt.step();
  }
  return m;
}

double evaluate_erm_d(const ErmDModel& model, const std::vector<const Domain*>& test) {
  if (test.empty()) throw ArgumentError("evaluate_erm_d: empty test set");
  NoGradGuard ng;
  double acc = 0.0;
  for (const Domain* d : test) {
    Tensor feats = relu(model.body.forward(d->inputs));
    Tensor code = model.z_encoder.forward(descriptor_row(d->descriptor));
    Tensor ones = Tensor::from_values({d->inputs.rows(), 1},
                                      std::vector<double>(d->inputs.rows(), 1.0));
    Tensor batch = concat_cols({feats, matmul(ones, code)});
    acc += error_rate(model.head.forward(batch), d->labels);
  }
  return acc / static_cast<double>(test.size());
}

NdaModel train_nda(const std::vector<Domain>& domains, const BaselineConfig& cfg) {
  ErmModel base = train_erm(domains, cfg);
  NdaModel m;
  m.arch = cfg.arch;
  for (const auto& dom : domains) {
    Tensor theta =
        Tensor::from_values({1, cfg.arch.param_count()}, base.theta.values(), true);
    theta = fit_theta(cfg.arch, dom.inputs, dom.labels, theta,
                      cfg.nda_finetune_steps, cfg.learning_rate);
    m.train_descriptors.push_back(dom.descriptor);
    m.thetas.push_back(theta);
  }
  return m;
}

double evaluate_nda(const NdaModel& model, const std::vector<const Domain*>& test) {
  if (test.empty()) throw ArgumentError("evaluate_nda: empty test set");
  if (model.thetas.empty()) throw StateError("evaluate_nda: untrained model");
  NoGradGuard ng;
  int n = static_cast<int>(model.train_descriptors.size());
  int d = static_cast<int>(model.train_descriptors[0].size());
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy(model.train_descriptors[i].begin(), model.train_descriptors[i].end(),
              flat.begin() + static_cast<std::ptrdiff_t>(i) * d);
  Tensor points = Tensor::from_values({n, d}, std::move(flat));

  double acc = 0.0;
  for (const Domain* dom : test) {
    int nearest = knn(points, descriptor_row(dom->descriptor), 1)[0];
    acc += error_rate(predict(model.arch, model.thetas[nearest], dom->inputs),
                      dom->labels);
  }
  return acc / static_cast<double>(test.size());
}

}  // namespace lio
