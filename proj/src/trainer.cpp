#include "lio/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lio/adam.hpp"
#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/linalg.hpp"

namespace lio {

namespace {

struct LossNodes {
  Tensor pred_self, recon, pred_cross, consist, embed, total;
};

void check_finite_components(const LossNodes& l, int epoch, int step) {
  const std::pair<const char*, const Tensor*> comps[] = {
      {"pred_self", &l.pred_self}, {"recon", &l.recon},
      {"pred_cross", &l.pred_cross}, {"consist", &l.consist},
      {"embed", &l.embed},         {"total", &l.total}};
  for (auto& [name, t] : comps) {
    if (!std::isfinite(t->item()))
      throw NumericError("non-finite loss component " + std::string(name) +
                         " at epoch " + std::to_string(epoch) + " step " +
                         std::to_string(step));
  }
}

}  // namespace

TrainedState train(const std::vector<Domain>& domains, const TrainConfig& config) {
  int n = static_cast<int>(domains.size());
  if (n < 2) throw ArgumentError("train: need at least 2 training domains");
  if (config.minibatch_domains < 1)
    throw ArgumentError("train: minibatch_domains must be positive");
  if (config.epochs < 0) throw ArgumentError("train: negative epochs");
  int d = static_cast<int>(domains[0].descriptor.size());
  for (const auto& dom : domains) {
    if (static_cast<int>(dom.descriptor.size()) != d)
      throw ArgumentError("train: inconsistent descriptor dimensions");
    if (dom.inputs.rows() != static_cast<int>(dom.labels.size()))
      throw ArgumentError("train: inputs/labels mismatch in domain " +
                          std::to_string(dom.id));
  }

  int D = config.arch.param_count();
  int batch_size = std::min(config.minibatch_domains, n);
  int k = std::min(config.k, n - 1);

  Rng root(config.seed);
  Rng rng_theta = root.fork(1);
  Rng rng_op = root.fork(2);
  Rng rng_loop = root.fork(3);

  TrainedState st;
  st.store.arch = config.arch;

  // all domains start from one shared draw so early transport learns
  // deviations rather than initial scatter
  Tensor shared = init_theta(config.arch, rng_theta);
  for (const auto& dom : domains) {
    ParamVector pv;
    pv.domain_id = dom.id;
    pv.theta = Tensor::from_values({1, D}, shared.values(), /*requires_grad=*/true);
    st.store.by_domain.emplace(dom.id, pv);
    st.train_ids.push_back(dom.id);
    st.train_descriptors.push_back(dom.descriptor);
  }

  OperatorConfig oc;
  oc.D = D;
  oc.d = d;
  oc.m = config.m;
  oc.B = config.B;
  oc.encoder_hidden = config.encoder_hidden;
  oc.field_hidden = config.field_hidden;
  oc.plain_hidden = config.plain_hidden;
  oc.k = k;
  oc.variant = config.variant;
  st.op = make_operator(oc, rng_op);

  if (config.variant.no_chart) {
    st.op.charts.k = n - 1;
    st.op.charts.neighbors.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i) st.op.charts.neighbors[i].push_back(j);
  } else {
    std::vector<Descriptor> descs;
    for (const auto& dom : domains) descs.push_back(dom.descriptor);
    st.op.charts = build_charts(descs, k);
  }

  Adam opt(config.learning_rate);
  for (int i = 0; i < n; ++i) opt.add_param(st.store.at(st.train_ids[i]).theta);
  opt.add_params(st.op.trainable_params());

  // immutable per-domain constants
  std::vector<Tensor> z_rows(n), theta_rows(n);
  for (int i = 0; i < n; ++i) {
    z_rows[i] = descriptor_row(domains[i].descriptor);
    theta_rows[i] = st.store.at(st.train_ids[i]).theta;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const auto& wts = config.weights;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng_loop.shuffle(order);
    LossBreakdown epoch_acc;
    int steps = 0;

    for (int start = 0; start < n; start += batch_size) {
      int stop = std::min(start + batch_size, n);
      std::vector<int> batch(order.begin() + start, order.begin() + stop);
      int bs = static_cast<int>(batch.size());

      // encode batch thetas plus every referenced neighbor theta, deduplicated
      std::vector<int> enc_ids = batch;
      std::vector<int> enc_pos(n, -1);
      for (int p = 0; p < bs; ++p) enc_pos[batch[p]] = p;
      for (int i : batch)
        for (int j : st.op.charts.neighbors[i])
          if (enc_pos[j] < 0) {
            enc_pos[j] = static_cast<int>(enc_ids.size());
            enc_ids.push_back(j);
          }
      std::vector<Tensor> enc_rows;
      enc_rows.reserve(enc_ids.size());
      for (int i : enc_ids) enc_rows.push_back(theta_rows[i]);
      Tensor thetas = stack_rows(enc_rows);                 // [n_enc, D]
      Tensor latents = st.op.enc_dec.encoder.forward(thetas);  // [n_enc, m]

      // per-pair latent transport
      struct Pair {
        int i, j;
      };
      std::vector<Pair> pairs;
      std::vector<Tensor> moved_rows;
      for (int i : batch) {
        Tensor e_i = slice_rows(latents, enc_pos[i], enc_pos[i] + 1);
        for (int j : st.op.charts.neighbors[i]) {
          auto [zi_g, zj_g] =
              gate_descriptors(z_rows[i], z_rows[j], st.op.gate, st.op.variant.no_gate);
          Tensor moved;
          if (st.op.variant.plain)
            moved = st.op.plain_net.forward(concat_cols({zi_g, zj_g, e_i}));
          else
            moved = transport_latent(e_i, zi_g, zj_g, st.op.bank, st.op.variant);
          pairs.push_back({i, j});
          moved_rows.push_back(moved);
        }
      }
      int np = static_cast<int>(pairs.size());

      // single decoder pass over batch latents (reconstruction) and moved ones
      std::vector<Tensor> dec_in;
      dec_in.reserve(1 + moved_rows.size());
      dec_in.push_back(slice_rows(latents, 0, bs));
      for (auto& r : moved_rows) dec_in.push_back(r);
      Tensor decoded = st.op.enc_dec.decoder.forward(stack_rows(dec_in));

      LossNodes loss;
      {
        Tensor batch_thetas = slice_rows(thetas, 0, bs);
        Tensor recon_diff = sub(slice_rows(decoded, 0, bs), batch_thetas);
        loss.recon = scale(sum_sq(recon_diff), 1.0 / bs);
      }
      {
        Tensor acc;
        for (int p = 0; p < bs; ++p) {
          int i = batch[p];
          Tensor logits = predict(config.arch, theta_rows[i], domains[i].inputs);
          Tensor ce = softmax_cross_entropy(logits, domains[i].labels);
          acc = p == 0 ? ce : add(acc, ce);
        }
        loss.pred_self = scale(acc, 1.0 / bs);
      }
      if (np > 0) {
        Tensor moved_thetas = slice_rows(decoded, bs, bs + np);
        Tensor acc;
        for (int p = 0; p < np; ++p) {
          int j = pairs[p].j;
          Tensor theta_hat = slice_rows(moved_thetas, p, p + 1);
          Tensor logits = predict(config.arch, theta_hat, domains[j].inputs);
          Tensor ce = softmax_cross_entropy(logits, domains[j].labels);
          acc = p == 0 ? ce : add(acc, ce);
        }
        loss.pred_cross = scale(acc, 1.0 / bs);

        std::vector<Tensor> target_rows;
        target_rows.reserve(np);
        for (auto& pr : pairs) target_rows.push_back(theta_rows[pr.j]);
        Tensor consist_diff = sub(moved_thetas, stack_rows(target_rows));
        loss.consist = scale(sum_sq(consist_diff), 1.0 / bs);

        std::vector<Tensor> latent_targets;
        latent_targets.reserve(np);
        for (auto& pr : pairs)
          latent_targets.push_back(
              slice_rows(latents, enc_pos[pr.j], enc_pos[pr.j] + 1));
        Tensor embed_diff = sub(stack_rows(moved_rows), stack_rows(latent_targets));
        loss.embed = scale(sum_sq(embed_diff), 1.0 / bs);
      } else {
        loss.pred_cross = Tensor::scalar(0.0);
        loss.consist = Tensor::scalar(0.0);
        loss.embed = Tensor::scalar(0.0);
      }

      loss.total = add(
          add(add(scale(loss.pred_self, wts.pred_self), scale(loss.recon, wts.recon)),
              add(scale(loss.pred_cross, wts.pred_cross),
                  scale(loss.consist, wts.consist))),
          scale(loss.embed, wts.embed));

      check_finite_components(loss, epoch, steps);

      opt.zero_grad();
      backward(loss.total);
      opt.step();

      epoch_acc.pred_self += loss.pred_self.item();
      epoch_acc.recon += loss.recon.item();
      epoch_acc.pred_cross += loss.pred_cross.item();
      epoch_acc.consist += loss.consist.item();
      epoch_acc.embed += loss.embed.item();
      epoch_acc.total += loss.total.item();
      ++steps;
    }

    if (steps > 0) {
      epoch_acc.pred_self /= steps;
      epoch_acc.recon /= steps;
      epoch_acc.pred_cross /= steps;
      epoch_acc.consist /= steps;
      epoch_acc.embed /= steps;
      epoch_acc.total /= steps;
    }
    st.history.push_back(epoch_acc);
  }
  return st;
}

Tensor infer(const Descriptor& z_s, const TrainedState& state) {
  if (state.store.by_domain.empty()) throw StateError("infer: empty parameter store");
  if (state.train_descriptors.empty())
    throw StateError("infer: no training descriptors recorded");
  int n = static_cast<int>(state.train_descriptors.size());
  int d = static_cast<int>(state.train_descriptors[0].size());
  if (static_cast<int>(z_s.size()) != d)
    throw ArgumentError("infer: descriptor dimension mismatch");

  NoGradGuard ng;
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy(state.train_descriptors[i].begin(), state.train_descriptors[i].end(),
              flat.begin() + static_cast<std::ptrdiff_t>(i) * d);
  Tensor points = Tensor::from_values({n, d}, std::move(flat));
  Tensor query = descriptor_row(z_s);
  int nearest = knn(points, query, 1)[0];

  const ParamVector& pv = state.store.at(state.train_ids[nearest]);
  Tensor z_i = descriptor_row(state.train_descriptors[nearest]);
  return transport_params(state.op, pv.theta, z_i, query);
}

void save_loss_history(const std::vector<LossBreakdown>& history,
                       const std::string& path) {
  CsvWriter w(path);
  w.header({"epoch", "pred_self", "recon", "pred_cross", "consist", "embed", "total"});
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    w.row({std::to_string(e), fmt_g17(h.pred_self), fmt_g17(h.recon),
           fmt_g17(h.pred_cross), fmt_g17(h.consist), fmt_g17(h.embed),
           fmt_g17(h.total)});
  }
}

}  // namespace lio
