#include "lio/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/linalg.hpp"
#include "lio/rng.hpp"

namespace lio {

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double evaluate(const std::vector<const Domain*>& test_domains,
                const TrainedState& state) {
  if (test_domains.empty()) throw ArgumentError("evaluate: empty test set");
  NoGradGuard ng;
  double acc = 0.0;
  for (const Domain* dom : test_domains) {
    Tensor theta = infer(dom->descriptor, state);
    acc += error_rate(predict(state.store.arch, theta, dom->inputs), dom->labels);
  }
  return acc / static_cast<double>(test_domains.size());
}

double oracle_train_error(const std::vector<Domain>& train_domains,
                          const TrainedState& state) {
  if (train_domains.empty()) throw ArgumentError("oracle_train_error: empty set");
  NoGradGuard ng;
  double acc = 0.0;
  for (const auto& dom : train_domains) {
    const auto& pv = state.store.at(dom.id);
    acc += error_rate(predict(state.store.arch, pv.theta, dom.inputs), dom.labels);
  }
  return acc / static_cast<double>(train_domains.size());
}

StructureReport verify_structure(const std::vector<Descriptor>& test_descriptors,
                                 const TrainedState& state, int triplet_samples,
                                 std::uint64_t sample_seed,
                                 LatentStructureDiag* latent_diag) {
  int n = static_cast<int>(test_descriptors.size());
  if (n < 3) throw ArgumentError("verify_structure: need at least 3 descriptors");
  if (triplet_samples < 1)
    throw ArgumentError("verify_structure: triplet_samples must be positive");

  NoGradGuard ng;
  const auto& op = state.op;

  std::vector<Tensor> theta(n), zrow(n);
  for (int i = 0; i < n; ++i) {
    theta[i] = infer(test_descriptors[i], state);
    zrow[i] = descriptor_row(test_descriptors[i]);
  }

  auto move_theta = [&op](const Tensor& th, const Tensor& zi, const Tensor& zj) {
    return transport_params(op, th, zi, zj);
  };
  auto move_latent = [&op](const Tensor& e, const Tensor& zi, const Tensor& zj) {
    auto [gi, gj] = gate_descriptors(zi, zj, op.gate, op.variant.no_gate);
    if (op.variant.plain) return op.plain_net.forward(concat_cols({gi, gj, e}));
    return transport_latent(e, gi, gj, op.bank, op.variant);
  };

  StructureReport rep;
  LatentStructureDiag diag;

  {
    double acc = 0.0, lacc = 0.0;
    for (int i = 0; i < n; ++i) {
      Tensor t = move_theta(theta[i], zrow[i], zrow[i]);
      acc += cosine(theta[i].values(), t.values());
      Tensor e = encode(op, theta[i]);
      Tensor te = move_latent(e, zrow[i], zrow[i]);
      lacc += cosine(e.values(), te.values());
    }
    rep.identity_cos = acc / n;
    rep.identity_n = n;
    diag.identity_cos = lacc / n;
  }

  Rng rng(sample_seed);
  auto draw_distinct = [&rng, n](int count) {
    std::vector<int> out;
    std::set<int> seen;
    while (static_cast<int>(out.size()) < count) {
      int v = static_cast<int>(rng.uniform_int(n));
      if (seen.insert(v).second) out.push_back(v);
    }
    return out;
  };

  {
    double acc = 0.0, lacc = 0.0;
    for (int s = 0; s < triplet_samples; ++s) {
      auto ijk = draw_distinct(3);
      int i = ijk[0], j = ijk[1], kk = ijk[2];
      Tensor via = move_theta(move_theta(theta[i], zrow[i], zrow[j]), zrow[j], zrow[kk]);
      Tensor direct = move_theta(theta[i], zrow[i], zrow[kk]);
      acc += cosine(via.values(), direct.values());

      Tensor e = encode(op, theta[i]);
      Tensor lvia = move_latent(move_latent(e, zrow[i], zrow[j]), zrow[j], zrow[kk]);
      Tensor ldirect = move_latent(e, zrow[i], zrow[kk]);
      lacc += cosine(lvia.values(), ldirect.values());
    }
    rep.associativity_cos = acc / triplet_samples;
    rep.associativity_n = triplet_samples;
    diag.associativity_cos = lacc / triplet_samples;
  }

  {
    double acc = 0.0, lacc = 0.0;
    for (int s = 0; s < triplet_samples; ++s) {
      auto ij = draw_distinct(2);
      int i = ij[0], j = ij[1];
      Tensor round = move_theta(move_theta(theta[i], zrow[i], zrow[j]), zrow[j], zrow[i]);
      acc += cosine(round.values(), theta[i].values());

      Tensor e = encode(op, theta[i]);
      Tensor lround = move_latent(move_latent(e, zrow[i], zrow[j]), zrow[j], zrow[i]);
      lacc += cosine(lround.values(), e.values());
    }
    rep.invertibility_cos = acc / triplet_samples;
    rep.invertibility_n = triplet_samples;
    diag.invertibility_cos = lacc / triplet_samples;
  }

  if (latent_diag) *latent_diag = diag;
  return rep;
}

std::vector<double> SweepResult::levels() const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.level) == out.end()) out.push_back(r.level);
  std::sort(out.begin(), out.end());
  return out;
}

double SweepResult::mean_error(double level, const std::string& variant) const {
  double acc = 0.0;
  int c = 0;
  for (const auto& r : rows)
    if (r.level == level && r.variant == variant) {
      acc += r.error;
      ++c;
    }
  if (c == 0) throw ArgumentError("SweepResult: no rows at requested cell");
  return acc / c;
}

double SweepResult::stddev_error(double level, const std::string& variant) const {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.level == level && r.variant == variant) v.push_back(r.error);
  if (v.size() < 2) return 0.0;
  double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

namespace {

// deterministic but decorrelated per-point seeds
std::uint64_t point_seed(std::uint64_t run_seed, std::uint64_t salt) {
  return splitmix64(run_seed * 0x9e3779b97f4a7c15ULL ^ splitmix64(salt));
}

double retrain_error(const DatasetConfig& dcfg, const TrainConfig& tcfg,
                     bool mesh_only) {
  Dataset ds = make_dataset(dcfg);
  TrainedState st = train(ds.train, tcfg);
  std::vector<const Domain*> test;
  if (mesh_only)
    for (const auto& d : ds.test_mesh) test.push_back(&d);
  else
    test = ds.all_test();
  return evaluate(test, st);
}

}  // namespace

double imperfection_point(ImperfectionKind kind, int level, bool ablated,
                          std::uint64_t seed, const SweepRunParams& params) {
  DatasetConfig dcfg = params.dataset;
  dcfg.seed = seed;
  dcfg.imperfection.kind = kind;
  dcfg.imperfection.seed = point_seed(seed, 100 + level);
  switch (kind) {
    case ImperfectionKind::noisy:
      dcfg.imperfection.noise_dims = level;
      if (level == 0) dcfg.imperfection.kind = ImperfectionKind::none;
      break;
    case ImperfectionKind::redundant:
      dcfg.imperfection.projection_dim = level;
      break;
    case ImperfectionKind::incomplete:
      dcfg.imperfection.drop_count = level;
      break;
    case ImperfectionKind::none:
      throw ArgumentError("imperfection_point: kind must not be none");
  }
  TrainConfig tcfg = params.train;
  tcfg.seed = seed;
  if (ablated) {
    if (kind == ImperfectionKind::incomplete)
      tcfg.variant.no_chart = true;
    else
      tcfg.variant.no_gate = true;
  }
  return retrain_error(dcfg, tcfg, /*mesh_only=*/false);
}

SweepResult imperfection_sweep(ImperfectionKind kind, const std::vector<int>& levels,
                               const SweepRunParams& params, bool run_primary,
                               bool run_ablated) {
  if (params.seeds.empty()) throw ArgumentError("imperfection_sweep: no seeds");
  SweepResult res;
  res.axis = to_string(kind);
  std::string primary_name =
      kind == ImperfectionKind::incomplete ? "charted" : "gated";
  std::string ablated_name =
      kind == ImperfectionKind::incomplete ? "uncharted" : "ungated";
  for (int level : levels) {
    for (std::uint64_t seed : params.seeds) {
      if (run_primary)
        res.rows.push_back({static_cast<double>(level), primary_name, seed,
                            imperfection_point(kind, level, false, seed, params)});
      if (run_ablated)
        res.rows.push_back({static_cast<double>(level), ablated_name, seed,
                            imperfection_point(kind, level, true, seed, params)});
    }
  }
  return res;
}

double domain_count_point(int count, std::uint64_t seed, const SweepRunParams& params) {
  if (count < 2) throw ArgumentError("domain_count_point: count must be >= 2");
  DatasetConfig dcfg = params.dataset;
  dcfg.n_train = count;
  dcfg.n_test = 0;  // fixed mesh is the evaluation set
  dcfg.seed = point_seed(seed, 5000 + static_cast<std::uint64_t>(count));
  TrainConfig tcfg = params.train;
  tcfg.seed = seed;
  return retrain_error(dcfg, tcfg, /*mesh_only=*/true);
}

SweepResult domain_count_sweep(const std::vector<int>& counts,
                               const SweepRunParams& params) {
  if (params.seeds.empty()) throw ArgumentError("domain_count_sweep: no seeds");
  if (!std::is_sorted(counts.begin(), counts.end()))
    throw ArgumentError("domain_count_sweep: counts must be ascending");
  SweepResult res;
  res.axis = "domain_count";
  for (int count : counts)
    for (std::uint64_t seed : params.seeds)
      res.rows.push_back({static_cast<double>(count), "full", seed,
                          domain_count_point(count, seed, params)});
  return res;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ArgumentError("spearman: need two equal-length series of >= 2");
  auto ranks = [](const std::vector<double>& v) {
    int n = static_cast<int>(v.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&v](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    int i = 0;
    while (i < n) {
      int j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = (i + j) / 2.0 + 1.0;  // average rank for the tie group
      for (int t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

ManifoldExport export_manifold(const std::vector<Descriptor>& mesh, int mesh_per_axis,
                               const TrainedState& state, std::uint64_t pair_seed) {
  int n = static_cast<int>(mesh.size());
  if (mesh_per_axis < 2 || n != mesh_per_axis * mesh_per_axis)
    throw ArgumentError("export_manifold: mesh size must equal mesh_per_axis^2");

  NoGradGuard ng;
  int D = state.store.arch.param_count();
  std::vector<double> flat(static_cast<std::size_t>(n) * D);
  for (int i = 0; i < n; ++i) {
    Tensor th = infer(mesh[i], state);
    const auto& v = th.values();
    std::copy(v.begin(), v.end(), flat.begin() + static_cast<std::ptrdiff_t>(i) * D);
  }
  Tensor thetas = Tensor::from_values({n, D}, std::move(flat));
  PcaResult pca = pca_project(thetas, 3);

  ManifoldExport out;
  out.descriptors = mesh;
  out.projected = pca.projected;
  out.components = pca.components;
  out.explained_variance = pca.explained_variance;

  const auto& p = out.projected.values();
  auto dist3 = [&p](int a, int b) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      double diff = p[3 * static_cast<std::size_t>(a) + c] -
                    p[3 * static_cast<std::size_t>(b) + c];
      s += diff * diff;
    }
    return std::sqrt(s);
  };

  // mesh is row-major over (axis1, axis2)
  double adj_acc = 0.0;
  int adj_n = 0;
  int g = mesh_per_axis;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      int a = i * g + j;
      if (j + 1 < g) {
        adj_acc += dist3(a, a + 1);
        ++adj_n;
      }
      if (i + 1 < g) {
        adj_acc += dist3(a, a + g);
        ++adj_n;
      }
    }
  out.mean_adjacent_distance = adj_acc / adj_n;

  Rng rng(pair_seed);
  double rnd_acc = 0.0;
  int rnd_n = 0;
  while (rnd_n < adj_n) {
    int a = static_cast<int>(rng.uniform_int(n));
    int b = static_cast<int>(rng.uniform_int(n));
    if (a == b) continue;
    int ar = a / g, ac = a % g, br = b / g, bc = b % g;
    bool adjacent = (ar == br && std::abs(ac - bc) == 1) ||
                    (ac == bc && std::abs(ar - br) == 1);
    if (adjacent) continue;
    rnd_acc += dist3(a, b);
    ++rnd_n;
  }
  out.mean_random_distance = rnd_acc / rnd_n;
  return out;
}

void write_results_main(const std::string& path,
                        const std::vector<std::tuple<std::string, std::string,
                                                     std::uint64_t, double>>& rows,
                        const std::string& config_hash) {
  CsvWriter w(path);
  w.header({"model", "dataset", "seed", "error", "config_hash"});
  for (const auto& [model, dataset, seed, error] : rows)
    w.row({model, dataset, std::to_string(seed), fmt_g17(error), config_hash});
}

void write_structure_csv(const std::string& path, const StructureReport& r,
                         const std::string& config_hash) {
  CsvWriter w(path);
  w.header({"property", "mean_cos", "n", "config_hash"});
  w.row({"identity", fmt_g17(r.identity_cos), std::to_string(r.identity_n),
         config_hash});
  w.row({"associativity", fmt_g17(r.associativity_cos),
         std::to_string(r.associativity_n), config_hash});
  w.row({"invertibility", fmt_g17(r.invertibility_cos),
         std::to_string(r.invertibility_n), config_hash});
}

void write_sweep_csv(const std::string& path, const SweepResult& r,
                     const std::string& config_hash) {
  CsvWriter w(path);
  w.header({"level", "variant", "seed", "error", "config_hash"});
  for (const auto& row : r.rows)
    w.row({fmt_g17(row.level), row.variant, std::to_string(row.seed),
           fmt_g17(row.error), config_hash});
}

void write_manifold_csv(const std::string& path, const ManifoldExport& m,
                        const std::string& config_hash) {
  CsvWriter w(path);
  w.header({"z1", "z2", "pc1", "pc2", "pc3", "config_hash"});
  const auto& p = m.projected.values();
  for (std::size_t i = 0; i < m.descriptors.size(); ++i) {
    const auto& z = m.descriptors[i];
    w.row({fmt_g17(z.size() > 0 ? z[0] : 0.0), fmt_g17(z.size() > 1 ? z[1] : 0.0),
           fmt_g17(p[3 * i]), fmt_g17(p[3 * i + 1]), fmt_g17(p[3 * i + 2]),
           config_hash});
  }
}

}  // namespace lio
