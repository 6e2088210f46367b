#include "lio/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "lio/baselines.hpp"
#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/evalsuite.hpp"
#include "lio/svgplot.hpp"

namespace fs = std::filesystem;

namespace lio {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_resolved(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir + "/config_resolved.txt", resolved_config_text(cfg));
}

std::string dataset_dir_of(const CliOptions& opt, const ExperimentConfig& cfg) {
  return opt.dataset_dir.empty() ? cfg.output_dir + "/dataset" : opt.dataset_dir;
}

std::string checkpoint_dir_of(const CliOptions& opt, const ExperimentConfig& cfg) {
  return opt.checkpoint_dir.empty() ? cfg.output_dir + "/checkpoint"
                                    : opt.checkpoint_dir;
}

std::string results_dir_of(const ExperimentConfig& cfg) {
  std::string dir = cfg.output_dir + "/results";
  fs::create_directories(dir);
  return dir;
}

std::string dataset_name(const DatasetConfig& d) {
  switch (d.imperfection.kind) {
    case ImperfectionKind::none:
      return "2moons";
    case ImperfectionKind::noisy:
      return "2moons_noisy" + std::to_string(d.imperfection.noise_dims);
    case ImperfectionKind::redundant:
      return "2moons_redundant" + std::to_string(d.imperfection.projection_dim);
    case ImperfectionKind::incomplete:
      return "2moons_incomplete" + std::to_string(d.imperfection.drop_count);
  }
  return "2moons";
}

void apply_ablation_flags(TrainConfig& tc, const std::string& names) {
  for (const auto& name : split_list(names)) {
    if (name == "full") continue;
    if (name == "plain") tc.variant.plain = true;
    else if (name == "no_lie") tc.variant.no_lie = true;
    else if (name == "no_gate") tc.variant.no_gate = true;
    else if (name == "no_chart") tc.variant.no_chart = true;
    else if (name == "raw_coeffs") tc.variant.raw_coeffs = true;
    else throw ArgumentError("unknown ablation: " + name);
  }
}

void write_loss_svg(const std::vector<LossBreakdown>& hist, const std::string& path) {
  if (hist.empty()) return;
  PlotSpec spec;
  spec.title = "training loss";
  spec.x_label = "epoch";
  spec.y_label = "loss";
  spec.y_from_zero = true;
  const char* names[] = {"pred_self", "recon", "pred_cross", "consist", "embed",
                         "total"};
  for (int c = 0; c < 6; ++c) {
    PlotSeries s;
    s.name = names[c];
    s.draw_points = false;
    for (std::size_t e = 0; e < hist.size(); ++e) {
      s.x.push_back(static_cast<double>(e));
      const auto& h = hist[e];
      double v[] = {h.pred_self, h.recon, h.pred_cross, h.consist, h.embed, h.total};
      s.y.push_back(v[c]);
    }
    spec.series.push_back(std::move(s));
  }
  write_svg(path, render_line_plot(spec));
}

void write_sweep_svg(const SweepResult& res, const std::string& path,
                     const std::string& x_label) {
  PlotSpec spec;
  spec.title = "error vs " + res.axis;
  spec.x_label = x_label;
  spec.y_label = "test error (%)";
  spec.y_from_zero = true;
  std::vector<std::string> variants;
  for (const auto& r : res.rows)
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
      variants.push_back(r.variant);
  for (const auto& variant : variants) {
    PlotSeries s;
    s.name = variant;
    for (double level : res.levels()) {
      s.x.push_back(level);
      s.y.push_back(res.mean_error(level, variant));
    }
    spec.series.push_back(std::move(s));
  }
  write_svg(path, render_line_plot(spec));
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

// decision regions of the inferred classifier at one descriptor, with the
// domain's points overlaid; qualitative artifact only
void write_boundary_svg(const Domain& dom, const TrainedState& st,
                        const std::string& path) {
  NoGradGuard ng;
  Tensor theta = infer(dom.descriptor, st);

  const auto& pts = dom.inputs.values();
  int n = dom.inputs.shape()[0];
  double lo0 = pts[0], hi0 = pts[0], lo1 = pts[1], hi1 = pts[1];
  for (int i = 0; i < n; ++i) {
    lo0 = std::min(lo0, pts[2 * static_cast<std::size_t>(i)]);
    hi0 = std::max(hi0, pts[2 * static_cast<std::size_t>(i)]);
    lo1 = std::min(lo1, pts[2 * static_cast<std::size_t>(i) + 1]);
    hi1 = std::max(hi1, pts[2 * static_cast<std::size_t>(i) + 1]);
  }
  double pad0 = 0.15 * (hi0 - lo0), pad1 = 0.15 * (hi1 - lo1);
  lo0 -= pad0; hi0 += pad0; lo1 -= pad1; hi1 += pad1;

  const int g = 60;
  std::vector<double> grid(static_cast<std::size_t>(g) * g * 2);
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      grid[2 * (static_cast<std::size_t>(r) * g + c)] = lo0 + (c + 0.5) / g * (hi0 - lo0);
      grid[2 * (static_cast<std::size_t>(r) * g + c) + 1] = lo1 + (r + 0.5) / g * (hi1 - lo1);
    }
  Tensor gt = Tensor::from_values({g * g, 2}, std::move(grid));
  Tensor logits = predict(st.store.arch, theta, gt);
  const auto& lv = logits.values();

  const int w = 480, h = 480;
  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
    << "' viewBox='0 0 " << w << " " << h << "'>\n";
  double cw = static_cast<double>(w) / g, ch = static_cast<double>(h) / g;
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      std::size_t i = static_cast<std::size_t>(r) * g + c;
      bool cls1 = lv[2 * i + 1] > lv[2 * i];
      s << "<rect x='" << c * cw << "' y='" << (g - 1 - r) * ch << "' width='"
        << cw + 0.5 << "' height='" << ch + 0.5 << "' fill='"
        << (cls1 ? "#fde4e4" : "#e2ecfb") << "'/>\n";
    }
  for (int i = 0; i < n; ++i) {
    double x = (pts[2 * static_cast<std::size_t>(i)] - lo0) / (hi0 - lo0) * w;
    double y = h - (pts[2 * static_cast<std::size_t>(i) + 1] - lo1) / (hi1 - lo1) * h;
    s << "<circle cx='" << x << "' cy='" << y << "' r='2.2' fill='"
      << (dom.labels[i] ? "#b91c1c" : "#1d4ed8") << "'/>\n";
  }
  s << "</svg>\n";
  write_file(path, s.str());
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

}  // namespace

ExperimentConfig resolve_config(const CliOptions& opt) {
  ExperimentConfig cfg;
  if (!opt.config_path.empty()) cfg = load_experiment_config(opt.config_path);
  if (const char* env = std::getenv("LIODG_OUT"); env && *env)
    cfg.output_dir = env;
  else if (!opt.out_dir.empty())
    cfg.output_dir = opt.out_dir;
  if (opt.has_seed) {
    cfg.dataset.seed = opt.seed;
    cfg.train.seed = opt.seed;
  }
  return cfg;
}

void save_trained_state(const TrainedState& state, const std::string& dir) {
  fs::create_directories(dir);
  save_operator(state.op, dir + "/operator");
  save_param_store(state.store, dir + "/params");
  save_loss_history(state.history, dir + "/loss_history.csv");
  CsvWriter w(dir + "/train_descriptors.csv");
  int d = state.train_descriptors.empty()
              ? 0
              : static_cast<int>(state.train_descriptors[0].size());
  std::vector<std::string> head = {"id"};
  for (int c = 0; c < d; ++c) head.push_back("z" + std::to_string(c + 1));
  w.header(head);
  for (std::size_t i = 0; i < state.train_ids.size(); ++i) {
    std::vector<std::string> row = {std::to_string(state.train_ids[i])};
    for (double v : state.train_descriptors[i]) row.push_back(fmt_g17(v));
    w.row(row);
  }
}

TrainedState load_trained_state(const std::string& dir) {
  if (!fs::exists(dir + "/operator") || !fs::exists(dir + "/params"))
    throw IoError("checkpoint not found: " + dir);
  TrainedState st;
  st.op = load_operator(dir + "/operator");
  st.store = load_param_store(dir + "/params");

  auto drows = read_csv(dir + "/train_descriptors.csv");
  if (drows.size() < 2) throw IoError("empty train_descriptors.csv in " + dir);
  for (std::size_t r = 1; r < drows.size(); ++r) {
    const auto& row = drows[r];
    st.train_ids.push_back(std::stoi(row[0]));
    Descriptor z;
    for (std::size_t c = 1; c < row.size(); ++c) z.push_back(std::stod(row[c]));
    st.train_descriptors.push_back(std::move(z));
  }

  std::string hist_path = dir + "/loss_history.csv";
  if (!fs::exists(hist_path))
    throw StateError("untrained checkpoint (no loss history): " + dir);
  auto hrows = read_csv(hist_path);
  if (hrows.size() < 2)
    throw StateError("untrained checkpoint (empty loss history): " + dir);
  for (std::size_t r = 1; r < hrows.size(); ++r) {
    const auto& row = hrows[r];
    if (row.size() < 7) throw IoError("malformed loss history row in " + hist_path);
    LossBreakdown b;
    b.pred_self = std::stod(row[1]);
    b.recon = std::stod(row[2]);
    b.pred_cross = std::stod(row[3]);
    b.consist = std::stod(row[4]);
    b.embed = std::stod(row[5]);
    b.total = std::stod(row[6]);
    st.history.push_back(b);
  }
  return st;
}

namespace {

// "noisy:3" / "redundant:8" / "incomplete:4" shorthand for the config block
void apply_imperfection_flag(DatasetConfig& d, const std::string& arg) {
  if (arg.empty()) return;
  auto colon = arg.find(':');
  if (colon == std::string::npos || colon + 1 >= arg.size())
    throw ArgumentError("--imperfection expects kind:level, got " + arg);
  std::string kind = arg.substr(0, colon);
  int level = 0;
  try {
    level = std::stoi(arg.substr(colon + 1));
  } catch (const std::exception&) {
    throw ArgumentError("--imperfection level must be an integer: " + arg);
  }
  d.imperfection.kind = imperfection_kind_from_string(kind);
  switch (d.imperfection.kind) {
    case ImperfectionKind::noisy: d.imperfection.noise_dims = level; break;
    case ImperfectionKind::redundant: d.imperfection.projection_dim = level; break;
    case ImperfectionKind::incomplete: d.imperfection.drop_count = level; break;
    case ImperfectionKind::none: break;
  }
}

}  // namespace

int cmd_generate(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  apply_imperfection_flag(cfg.dataset, opt.imperfection);
  Dataset ds = make_dataset(cfg.dataset);
  std::string dir = dataset_dir_of(opt, cfg);
  write_dataset(ds, dir, config_hash(cfg));
  write_resolved(cfg);
  std::cout << "generate: " << ds.train.size() << " train + "
            << ds.test_random.size() << " random test + " << ds.test_mesh.size()
            << " mesh domains -> " << dir << "\n";
  return 0;
}

int cmd_train(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  apply_ablation_flags(cfg.train, opt.ablation);
  Dataset ds = load_dataset(dataset_dir_of(opt, cfg));
  Timer timer;
  TrainedState st = train(ds.train, cfg.train);
  std::string cdir = checkpoint_dir_of(opt, cfg);
  save_trained_state(st, cdir);
  write_loss_svg(st.history, cdir + "/loss_history.svg");
  write_resolved(cfg);
  const auto& last = st.history.back();
  std::cout << "train: " << st.history.size() << " epochs in " << timer.seconds()
            << " s, final total loss " << last.total << " -> " << cdir << "\n";
  return 0;
}

int cmd_eval(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(dataset_dir_of(opt, cfg));
  auto models = split_list(opt.models);
  for (const auto& m : models)
    if (m != "full" && m != "erm" && m != "erm_d" && m != "nda")
      throw ArgumentError("unknown model: " + m);

  TrainedState st;
  bool want_full =
      std::find(models.begin(), models.end(), "full") != models.end();
  if (want_full) st = load_trained_state(checkpoint_dir_of(opt, cfg));

  auto test = ds.all_test();
  std::string name = dataset_name(cfg.dataset);
  std::vector<std::tuple<std::string, std::string, std::uint64_t, double>> rows;
  std::vector<double> full_errors;

  for (const auto& model : models) {
    std::vector<double> errs;
    if (model == "full") {
      double e = evaluate(test, st);
      rows.emplace_back("full", name, cfg.train.seed, e);
      errs.push_back(e);
      full_errors.push_back(e);
    } else {
      for (std::uint64_t seed : cfg.eval.sweep_seeds) {
        BaselineConfig bc;
        bc.arch = cfg.train.arch;
        bc.learning_rate = cfg.train.learning_rate;
        bc.seed = seed;
        double e = 0.0;
        if (model == "erm")
          e = evaluate_erm(train_erm(ds.train, bc), test);
        else if (model == "erm_d")
          e = evaluate_erm_d(train_erm_d(ds.train, bc), test);
        else
          e = evaluate_nda(train_nda(ds.train, bc), test);
        rows.emplace_back(model, name, seed, e);
        errs.push_back(e);
      }
    }
    std::cout << "eval: model=" << model << " mean_error=" << mean_of(errs)
              << "%\n";
  }

  write_results_main(results_dir_of(cfg) + "/results_main.csv", rows,
                     config_hash(cfg));
  if (want_full && !ds.test_mesh.empty()) {
    // four descriptors spanning the box, for a visual boundary check
    double lo0 = cfg.dataset.bounds.lo[0], hi0 = cfg.dataset.bounds.hi[0];
    double lo1 = cfg.dataset.bounds.lo[1], hi1 = cfg.dataset.bounds.hi[1];
    double targets[4][2] = {{lo0 + 0.25 * (hi0 - lo0), lo1 + 0.25 * (hi1 - lo1)},
                            {lo0 + 0.25 * (hi0 - lo0), lo1 + 0.75 * (hi1 - lo1)},
                            {lo0 + 0.75 * (hi0 - lo0), lo1 + 0.25 * (hi1 - lo1)},
                            {lo0 + 0.75 * (hi0 - lo0), lo1 + 0.75 * (hi1 - lo1)}};
    for (int t = 0; t < 4; ++t) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ds.clean_test_mesh.size(); ++i) {
        const auto& z = ds.clean_test_mesh[i];
        double dx = z[0] - targets[t][0], dy = z[1] - targets[t][1];
        if (dx * dx + dy * dy < best_d) {
          best_d = dx * dx + dy * dy;
          best = i;
        }
      }
      write_boundary_svg(ds.test_mesh[best], st,
                         results_dir_of(cfg) + "/boundary_" + std::to_string(t) +
                             ".svg");
    }
  }
  write_resolved(cfg);

  if (want_full && mean_of(full_errors) > cfg.eval.main_error_max) {
    std::cout << "eval: FAIL mean full-model error " << mean_of(full_errors)
              << "% > " << cfg.eval.main_error_max << "%\n";
    return 1;
  }
  return 0;
}

int cmd_verify(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(dataset_dir_of(opt, cfg));
  TrainedState st = load_trained_state(checkpoint_dir_of(opt, cfg));

  std::vector<Descriptor> descs;
  for (const auto& d : ds.test_random) descs.push_back(d.descriptor);
  for (const auto& d : ds.test_mesh) descs.push_back(d.descriptor);

  LatentStructureDiag diag;
  StructureReport rep =
      verify_structure(descs, st, cfg.eval.triplet_samples, 9001, &diag);

  write_structure_csv(results_dir_of(cfg) + "/structure.csv", rep,
                      config_hash(cfg));
  write_resolved(cfg);

  std::cout << "verify: identity mean_cos=" << rep.identity_cos
            << " (n=" << rep.identity_n << ", latent " << diag.identity_cos
            << ")\n";
  std::cout << "verify: associativity mean_cos=" << rep.associativity_cos
            << " (n=" << rep.associativity_n << ", latent "
            << diag.associativity_cos << ")\n";
  std::cout << "verify: invertibility mean_cos=" << rep.invertibility_cos
            << " (n=" << rep.invertibility_n << ", latent "
            << diag.invertibility_cos << ")\n";

  bool ok = rep.identity_cos >= cfg.eval.identity_min &&
            rep.associativity_cos >= cfg.eval.associativity_min &&
            rep.invertibility_cos >= cfg.eval.invertibility_min;
  if (!ok) std::cout << "verify: FAIL below configured thresholds\n";
  return ok ? 0 : 1;
}

int cmd_ablate(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(dataset_dir_of(opt, cfg));
  auto test = ds.all_test();
  auto variants = split_list(opt.variants);
  if (variants.empty()) throw ArgumentError("ablate: no variants requested");
  std::string name = dataset_name(cfg.dataset);

  std::vector<std::tuple<std::string, std::string, std::uint64_t, double>> rows;
  std::vector<std::pair<std::string, double>> means;
  for (const auto& variant : variants) {
    std::vector<double> errs;
    for (std::uint64_t seed : cfg.eval.sweep_seeds) {
      TrainConfig tc = cfg.train;
      apply_ablation_flags(tc, variant);
      tc.seed = seed;
      TrainedState st = train(ds.train, tc);
      double e = evaluate(test, st);
      rows.emplace_back(variant, name, seed, e);
      errs.push_back(e);
    }
    means.emplace_back(variant, mean_of(errs));
    std::cout << "ablate: variant=" << variant << " mean_error=" << means.back().second
              << "%\n";
  }

  write_results_main(results_dir_of(cfg) + "/results_ablation.csv", rows,
                     config_hash(cfg));
  write_resolved(cfg);

  auto mean_for = [&means](const std::string& v) -> const double* {
    for (const auto& [name_, m] : means)
      if (name_ == v) return &m;
    return nullptr;
  };
  const double* full = mean_for("full");
  const double* plain = mean_for("plain");
  const double* no_lie = mean_for("no_lie");
  if (full && plain && no_lie) {
    bool ok = *full < *plain && *plain < *no_lie;
    if (!ok) {
      std::cout << "ablate: FAIL ordering full < plain < no_lie\n";
      return 1;
    }
  }
  return 0;
}

int cmd_sweep(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  const std::string& kind = opt.kind;
  if (kind.empty()) throw ArgumentError("sweep: --kind is required");

  SweepRunParams params;
  params.dataset = cfg.dataset;
  params.dataset.imperfection = ImperfectionSpec{};
  params.train = cfg.train;
  params.train.epochs = cfg.eval.sweep_epochs;
  params.seeds = cfg.eval.sweep_seeds;

  SweepResult res;
  std::string x_label = "level";
  if (kind == "noisy") {
    res = imperfection_sweep(ImperfectionKind::noisy, cfg.eval.noisy_levels, params);
    x_label = "appended noise dimensions";
  } else if (kind == "redundant") {
    res = imperfection_sweep(ImperfectionKind::redundant, cfg.eval.redundant_levels,
                             params);
    x_label = "projection dimensions";
  } else if (kind == "incomplete") {
    params.dataset.n_train = cfg.eval.incomplete_n_train;
    res = imperfection_sweep(ImperfectionKind::incomplete, cfg.eval.incomplete_levels,
                             params);
    x_label = "dropped dimensions";
  } else if (kind == "domain_count") {
    res = domain_count_sweep(cfg.eval.domain_counts, params);
    x_label = "training domains";
  } else {
    throw ArgumentError("sweep: unknown kind " + kind);
  }

  std::string rdir = results_dir_of(cfg);
  write_sweep_csv(rdir + "/sweep_" + kind + ".csv", res, config_hash(cfg));
  write_sweep_svg(res, rdir + "/sweep_" + kind + ".svg", x_label);
  write_resolved(cfg);

  for (double level : res.levels()) {
    std::cout << "sweep " << kind << ": level=" << level;
    for (const auto& variant : {std::string("gated"), std::string("ungated"),
                                std::string("charted"), std::string("uncharted"),
                                std::string("full")}) {
      bool have = false;
      for (const auto& r : res.rows)
        if (r.level == level && r.variant == variant) have = true;
      if (have)
        std::cout << " " << variant << "=" << res.mean_error(level, variant) << "%";
    }
    std::cout << "\n";
  }

  bool ok = true;
  if (kind == "noisy" && !cfg.eval.noisy_levels.empty()) {
    double top = *std::max_element(cfg.eval.noisy_levels.begin(),
                                   cfg.eval.noisy_levels.end());
    double g = res.mean_error(top, "gated");
    double u = res.mean_error(top, "ungated");
    ok = g < u && g <= cfg.eval.noisy_gated_max;
  } else if (kind == "redundant") {
    for (double level : res.levels())
      for (const auto& variant : {"gated", "ungated"})
        if (res.mean_error(level, variant) > cfg.eval.redundant_max) ok = false;
  } else if (kind == "incomplete") {
    double lvl = cfg.eval.incomplete_compare_level;
    ok = res.mean_error(lvl, "charted") < res.mean_error(lvl, "uncharted");
  } else if (kind == "domain_count") {
    std::vector<double> counts, errors;
    for (double level : res.levels()) {
      counts.push_back(level);
      errors.push_back(res.mean_error(level, "full"));
      if (level == 20.0 && errors.back() > cfg.eval.count20_max) ok = false;
      if (level == 50.0 && errors.back() > cfg.eval.count50_max) ok = false;
    }
    if (counts.size() >= 3 && spearman(counts, errors) > cfg.eval.spearman_max)
      ok = false;
  }
  if (!ok) std::cout << "sweep " << kind << ": FAIL configured gates\n";
  return ok ? 0 : 1;
}

int cmd_manifold(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  TrainedState st = load_trained_state(checkpoint_dir_of(opt, cfg));

  int g = cfg.eval.manifold_mesh;
  DescriptorSets sets =
      sample_descriptor_sets(0, 0, g, cfg.dataset.bounds, cfg.dataset.seed);
  std::vector<Descriptor> clean = sets.test_mesh;
  std::vector<Descriptor> visible =
      apply_imperfection(clean, cfg.dataset.imperfection);
  if (!visible.empty() &&
      static_cast<int>(visible[0].size()) != st.op.descriptor_dim())
    throw StateError("manifold: descriptor dimension mismatch with checkpoint");

  ManifoldExport ex = export_manifold(visible, g, st);
  ex.descriptors = clean;  // CSV reports the generating coordinates

  std::string rdir = results_dir_of(cfg);
  write_manifold_csv(rdir + "/manifold.csv", ex, config_hash(cfg));

  ScatterSpec scatter;
  scatter.title = "parameter manifold (PCA)";
  scatter.x_label = "pc1";
  scatter.y_label = "pc2";
  scatter.value_label = "z2";
  const auto& p = ex.projected.values();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    scatter.x.push_back(p[3 * i]);
    scatter.y.push_back(p[3 * i + 1]);
    scatter.value.push_back(clean[i].size() > 1 ? clean[i][1] : 0.0);
  }
  write_svg(rdir + "/manifold.svg", render_colored_scatter(scatter));
  write_resolved(cfg);

  const auto& comp = ex.components.values();
  int D = ex.components.shape()[1];
  double ortho_err = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int c = 0; c < D; ++c)
        dot += comp[a * static_cast<std::size_t>(D) + c] *
               comp[b * static_cast<std::size_t>(D) + c];
      ortho_err = std::max(ortho_err, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }

  std::cout << "manifold: " << clean.size() << " mesh points, orthonormality error "
            << ortho_err << ", adjacent distance " << ex.mean_adjacent_distance
            << " vs random " << ex.mean_random_distance << "\n";

  bool ok = ortho_err <= 1e-8 &&
            ex.mean_adjacent_distance < ex.mean_random_distance;
  if (!ok) std::cout << "manifold: FAIL smoothness or orthonormality gate\n";
  return ok ? 0 : 1;
}

int cmd_repro(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  std::string base = cfg.output_dir + "/repro";

  auto one_run = [&cfg](const std::string& dir) {
    Dataset ds = make_dataset(cfg.dataset);
    TrainedState st = train(ds.train, cfg.train);
    fs::create_directories(dir);
    save_loss_history(st.history, dir + "/loss_history.csv");
  };
  one_run(base + "/run1");
  one_run(base + "/run2");
  write_resolved(cfg);

  std::string a = read_file(base + "/run1/loss_history.csv");
  std::string b = read_file(base + "/run2/loss_history.csv");
  if (a == b) {
    std::cout << "repro: loss histories are byte-identical (" << a.size()
              << " bytes)\n";
    return 0;
  }
  std::cout << "repro: FAIL loss histories differ\n";
  return 1;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"continuous domain generalization via learned parameter transport"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "config file (text or JSON)");
    sub->add_option("--out", opt.out_dir,
                    "output root (LIODG_OUT environment variable wins)");
    sub->add_option("--seed", opt.seed, "override dataset and train seeds")
        ->each([&opt](const std::string&) { opt.has_seed = true; });
    sub->add_option("--jobs", opt.jobs, "worker threads (currently pinned to 1)");
    sub->add_option("--dataset", opt.dataset_dir, "dataset directory");
    sub->add_option("--checkpoint", opt.checkpoint_dir, "checkpoint directory");
  };

  auto* c_generate =
      app.add_subcommand("generate", "sample descriptors and write domain data");
  c_generate->add_option("--imperfection", opt.imperfection,
                         "descriptor imperfection as kind:level, e.g. noisy:3");
  auto* c_train = app.add_subcommand("train", "fit parameters and the transport");
  c_train->add_option("--ablation", opt.ablation,
                      "comma-separated variant flags (plain, no_lie, no_gate, "
                      "no_chart, raw_coeffs)");
  auto* c_eval = app.add_subcommand("eval", "score models on the test domains");
  c_eval->add_option("--models", opt.models,
                     "comma-separated subset of full,erm,erm_d,nda");
  auto* c_verify =
      app.add_subcommand("verify", "check identity/associativity/invertibility");
  auto* c_ablate = app.add_subcommand("ablate", "train and compare variants");
  c_ablate->add_option("--variants", opt.variants, "comma-separated variant list");
  auto* c_sweep = app.add_subcommand("sweep", "retrain across a difficulty axis");
  c_sweep->add_option("--kind", opt.kind,
                      "noisy | redundant | incomplete | domain_count");
  auto* c_manifold =
      app.add_subcommand("manifold", "project inferred parameters over a mesh");
  auto* c_repro =
      app.add_subcommand("repro", "train twice and compare loss histories");

  for (auto* sub : {c_generate, c_train, c_eval, c_verify, c_ablate, c_sweep,
                    c_manifold, c_repro})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (opt.jobs != 1) {
    std::cout << "note: --jobs " << opt.jobs
              << " requested; running single-threaded for determinism\n";
    opt.jobs = 1;
  }

  try {
    if (c_generate->parsed()) return cmd_generate(opt);
    if (c_train->parsed()) return cmd_train(opt);
    if (c_eval->parsed()) return cmd_eval(opt);
    if (c_verify->parsed()) return cmd_verify(opt);
    if (c_ablate->parsed()) return cmd_ablate(opt);
    if (c_sweep->parsed()) return cmd_sweep(opt);
    if (c_manifold->parsed()) return cmd_manifold(opt);
    if (c_repro->parsed()) return cmd_repro(opt);
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace lio
