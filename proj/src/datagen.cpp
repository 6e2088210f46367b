#include "lio/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "json.hpp"
#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/rng.hpp"

namespace fs = std::filesystem;

namespace lio {

ImperfectionKind imperfection_kind_from_string(const std::string& s) {
  if (s == "none" || s.empty()) return ImperfectionKind::none;
  if (s == "noisy") return ImperfectionKind::noisy;
  if (s == "redundant") return ImperfectionKind::redundant;
  if (s == "incomplete") return ImperfectionKind::incomplete;
  throw ArgumentError("unknown imperfection kind: " + s);
}

std::string to_string(ImperfectionKind k) {
  switch (k) {
    case ImperfectionKind::none: return "none";
    case ImperfectionKind::noisy: return "noisy";
    case ImperfectionKind::redundant: return "redundant";
    case ImperfectionKind::incomplete: return "incomplete";
  }
  return "none";
}

void make_base_moons(int n_per_class, double noise_std, std::uint64_t seed,
                     Tensor& inputs, std::vector<int>& labels) {
  if (n_per_class < 1) throw ArgumentError("make_base_moons: n_per_class must be >= 1");
  if (noise_std < 0.0) throw ArgumentError("make_base_moons: negative noise_std");
  Rng rng(seed);
  int n = 2 * n_per_class;
  std::vector<double> pts(static_cast<std::size_t>(n) * 2);
  labels.assign(n, 0);
  // lower moon: (1 - cos t, 0.5 - sin t), class 0
  for (int i = 0; i < n_per_class; ++i) {
    double t = rng.uniform(0.0, M_PI);
    double x = 1.0 - std::cos(t) + rng.normal(0.0, noise_std);
    double y = 0.5 - std::sin(t) + rng.normal(0.0, noise_std);
    pts[2 * i] = x;
    pts[2 * i + 1] = y;
  }
  // upper moon: (cos t, sin t), class 1
  for (int i = 0; i < n_per_class; ++i) {
    double t = rng.uniform(0.0, M_PI);
    double x = std::cos(t) + rng.normal(0.0, noise_std);
    double y = std::sin(t) + rng.normal(0.0, noise_std);
    std::size_t r = static_cast<std::size_t>(n_per_class + i);
    pts[2 * r] = x;
    pts[2 * r + 1] = y;
    labels[r] = 1;
  }
  inputs = Tensor::from_values({n, 2}, std::move(pts));
}

Domain make_domain(const Descriptor& z, std::uint64_t seed, const MoonParams& params) {
  if (z.size() != 2)
    throw ArgumentError("make_domain: descriptor must have 2 coordinates, got " +
                        std::to_string(z.size()));
  for (double v : z)
    if (!std::isfinite(v)) throw ArgumentError("make_domain: non-finite descriptor");

  Domain d;
  d.descriptor = z;
  make_base_moons(params.n_per_class, params.noise_std, seed, d.inputs, d.labels);

  auto& v = d.inputs.mutable_values();
  int n = d.inputs.rows();
  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < n; ++i) {
    cx += v[2 * static_cast<std::size_t>(i)];
    cy += v[2 * static_cast<std::size_t>(i) + 1];
  }
  cx /= n;
  cy /= n;

  double s = params.scale_law == ScaleLaw::compound ? std::pow(1.1, z[0])
                                                    : 1.0 + 0.1 * z[0];
  double a = 18.0 * z[1] * M_PI / 180.0;
  double ca = std::cos(a), sa = std::sin(a);
  for (int i = 0; i < n; ++i) {
    double x = v[2 * static_cast<std::size_t>(i)] - cx;
    double y = v[2 * static_cast<std::size_t>(i) + 1] - cy;
    x *= s;
    y *= s;
    double xr = ca * x - sa * y;
    double yr = sa * x + ca * y;
    v[2 * static_cast<std::size_t>(i)] = xr + cx;
    v[2 * static_cast<std::size_t>(i) + 1] = yr + cy;
  }
  return d;
}

DescriptorSets sample_descriptor_sets(int n_train, int n_test, int mesh_per_axis,
                                      const Box& bounds, std::uint64_t seed) {
  if (bounds.hi[0] <= bounds.lo[0] || bounds.hi[1] <= bounds.lo[1])
    throw ArgumentError("sample_descriptor_sets: degenerate bounds");
  if (n_train < 0 || n_test < 0 || mesh_per_axis < 0 || mesh_per_axis == 1)
    throw ArgumentError("sample_descriptor_sets: bad counts");
  Rng rng(seed);
  DescriptorSets out;
  out.train.reserve(n_train);
  for (int i = 0; i < n_train; ++i)
    out.train.push_back({rng.uniform(bounds.lo[0], bounds.hi[0]),
                         rng.uniform(bounds.lo[1], bounds.hi[1])});
  out.test_random.reserve(n_test);
  for (int i = 0; i < n_test; ++i)
    out.test_random.push_back({rng.uniform(bounds.lo[0], bounds.hi[0]),
                               rng.uniform(bounds.lo[1], bounds.hi[1])});
  if (mesh_per_axis >= 2) {
    out.test_mesh.reserve(static_cast<std::size_t>(mesh_per_axis) * mesh_per_axis);
    for (int i = 0; i < mesh_per_axis; ++i) {
      double z1 = bounds.lo[0] + i * (bounds.hi[0] - bounds.lo[0]) / (mesh_per_axis - 1);
      for (int j = 0; j < mesh_per_axis; ++j) {
        double z2 =
            bounds.lo[1] + j * (bounds.hi[1] - bounds.lo[1]) / (mesh_per_axis - 1);
        out.test_mesh.push_back({z1, z2});
      }
    }
  }
  return out;
}

namespace {

// projection_dim x 2 with full column rank, entries standard normal
Tensor sample_projection(Rng& rng, int rows) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> a(static_cast<std::size_t>(rows) * 2);
    for (double& x : a) x = rng.normal();
    // Gram determinant of the two columns
    double g00 = 0, g01 = 0, g11 = 0;
    for (int i = 0; i < rows; ++i) {
      g00 += a[2 * static_cast<std::size_t>(i)] * a[2 * static_cast<std::size_t>(i)];
      g01 += a[2 * static_cast<std::size_t>(i)] * a[2 * static_cast<std::size_t>(i) + 1];
      g11 += a[2 * static_cast<std::size_t>(i) + 1] * a[2 * static_cast<std::size_t>(i) + 1];
    }
    if (g00 * g11 - g01 * g01 > 1e-8)
      return Tensor::from_values({rows, 2}, std::move(a));
  }
  throw NumericError("sample_projection: could not draw a full-rank matrix");
}

}  // namespace

ImperfectionResult apply_imperfection_full(const std::vector<Descriptor>& descriptors,
                                           const ImperfectionSpec& spec) {
  ImperfectionResult res;
  res.descriptors = descriptors;
  if (spec.kind == ImperfectionKind::none) return res;

  Rng rng(spec.seed);
  switch (spec.kind) {
    case ImperfectionKind::noisy: {
      if (spec.noise_dims < 0 || spec.noise_dims > 5)
        throw ArgumentError("apply_imperfection: noise_dims outside [0,5]");
      for (auto& z : res.descriptors)
        for (int j = 0; j < spec.noise_dims; ++j) z.push_back(rng.uniform(0.0, 10.0));
      break;
    }
    case ImperfectionKind::redundant: {
      if (spec.projection_dim < 2)
        throw ArgumentError("apply_imperfection: projection_dim must be >= 2");
      res.projection = sample_projection(rng, spec.projection_dim);
      const auto& a = res.projection.values();
      for (auto& z : res.descriptors) {
        if (z.size() != 2)
          throw ArgumentError("apply_imperfection: redundant expects 2-dim input");
        Descriptor out(spec.projection_dim);
        for (int i = 0; i < spec.projection_dim; ++i)
          out[i] = a[2 * static_cast<std::size_t>(i)] * z[0] +
                   a[2 * static_cast<std::size_t>(i) + 1] * z[1];
        z = std::move(out);
      }
      break;
    }
    case ImperfectionKind::incomplete: {
      if (spec.drop_count < 1 || spec.drop_count > 7)
        throw ArgumentError("apply_imperfection: drop_count outside [1,7]");
      res.projection = sample_projection(rng, 8);
      std::vector<int> pos(8);
      std::iota(pos.begin(), pos.end(), 0);
      rng.shuffle(pos);
      res.dropped.assign(pos.begin(), pos.begin() + spec.drop_count);
      std::sort(res.dropped.begin(), res.dropped.end());
      const auto& a = res.projection.values();
      for (auto& z : res.descriptors) {
        if (z.size() != 2)
          throw ArgumentError("apply_imperfection: incomplete expects 2-dim input");
        Descriptor full(8);
        for (int i = 0; i < 8; ++i)
          full[i] = a[2 * static_cast<std::size_t>(i)] * z[0] +
                    a[2 * static_cast<std::size_t>(i) + 1] * z[1];
        Descriptor kept;
        kept.reserve(8 - spec.drop_count);
        for (int i = 0; i < 8; ++i)
          if (!std::binary_search(res.dropped.begin(), res.dropped.end(), i))
            kept.push_back(full[i]);
        z = std::move(kept);
      }
      break;
    }
    case ImperfectionKind::none:
      break;
  }
  return res;
}

std::vector<Descriptor> apply_imperfection(const std::vector<Descriptor>& descriptors,
                                           const ImperfectionSpec& spec) {
  return apply_imperfection_full(descriptors, spec).descriptors;
}

std::vector<const Domain*> Dataset::all_test() const {
  std::vector<const Domain*> out;
  out.reserve(test_random.size() + test_mesh.size());
  for (const auto& d : test_random) out.push_back(&d);
  for (const auto& d : test_mesh) out.push_back(&d);
  return out;
}

int Dataset::descriptor_dim() const {
  if (!train.empty()) return static_cast<int>(train[0].descriptor.size());
  if (!test_random.empty()) return static_cast<int>(test_random[0].descriptor.size());
  if (!test_mesh.empty()) return static_cast<int>(test_mesh[0].descriptor.size());
  return 0;
}

Dataset make_dataset(const DatasetConfig& cfg) {
  Dataset ds;
  ds.config = cfg;
  DescriptorSets sets = sample_descriptor_sets(cfg.n_train, cfg.n_test,
                                               cfg.mesh_per_axis, cfg.bounds, cfg.seed);
  ds.clean_train = sets.train;
  ds.clean_test_random = sets.test_random;
  ds.clean_test_mesh = sets.test_mesh;

  // one imperfection pass over the concatenated list keeps shared structure
  // (projection matrix, dropped positions) identical across splits
  std::vector<Descriptor> all;
  all.reserve(sets.train.size() + sets.test_random.size() + sets.test_mesh.size());
  all.insert(all.end(), sets.train.begin(), sets.train.end());
  all.insert(all.end(), sets.test_random.begin(), sets.test_random.end());
  all.insert(all.end(), sets.test_mesh.begin(), sets.test_mesh.end());
  ds.imperfection_detail = apply_imperfection_full(all, cfg.imperfection);
  const auto& seen = ds.imperfection_detail.descriptors;

  auto build = [&](const std::vector<Descriptor>& clean, std::size_t offset,
                   std::vector<Domain>& out, int id0) {
    for (std::size_t i = 0; i < clean.size(); ++i) {
      Domain d = make_domain(clean[i], cfg.seed, cfg.moons);
      d.id = id0 + static_cast<int>(i);
      d.descriptor = seen[offset + i];
      out.push_back(std::move(d));
    }
  };
  build(sets.train, 0, ds.train, 0);
  build(sets.test_random, sets.train.size(), ds.test_random,
        static_cast<int>(sets.train.size()));
  build(sets.test_mesh, sets.train.size() + sets.test_random.size(), ds.test_mesh,
        static_cast<int>(sets.train.size() + sets.test_random.size()));
  return ds;
}

namespace {

void write_domain_csv(const Domain& d, const std::string& path) {
  CsvWriter w(path);
  w.header({"x1", "x2", "label"});
  const auto& v = d.inputs.values();
  int n = d.inputs.rows();
  for (int i = 0; i < n; ++i)
    w.row({fmt_g17(v[2 * static_cast<std::size_t>(i)]),
           fmt_g17(v[2 * static_cast<std::size_t>(i) + 1]),
           std::to_string(d.labels[i])});
}

Domain load_domain_csv(const std::string& path, int id) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"x1", "x2", "label"})
    throw IoError("bad domain file header: " + path);
  int n = static_cast<int>(rows.size()) - 1;
  std::vector<double> pts(static_cast<std::size_t>(n) * 2);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[i + 1];
    if (r.size() != 3) throw IoError("bad row in " + path);
    pts[2 * static_cast<std::size_t>(i)] = std::stod(r[0]);
    pts[2 * static_cast<std::size_t>(i) + 1] = std::stod(r[1]);
    labels[i] = std::stoi(r[2]);
  }
  Domain d;
  d.id = id;
  d.inputs = Tensor::from_values({n, 2}, std::move(pts));
  d.labels = std::move(labels);
  return d;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir,
                   const std::string& config_hash) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  int d = ds.descriptor_dim();
  {
    CsvWriter w(dir + "/descriptors.csv");
    std::vector<std::string> head{"id", "split"};
    for (int j = 1; j <= d; ++j) head.push_back("z" + std::to_string(j));
    w.header(head);
    auto emit = [&](const std::vector<Domain>& v, const char* split) {
      for (const auto& dom : v) {
        std::vector<std::string> r{std::to_string(dom.id), split};
        for (double x : dom.descriptor) r.push_back(fmt_g17(x));
        w.row(r);
      }
    };
    emit(ds.train, "train");
    emit(ds.test_random, "test_random");
    emit(ds.test_mesh, "test_mesh");
  }

  for (const auto* list : {&ds.train, &ds.test_random, &ds.test_mesh})
    for (const auto& dom : *list)
      write_domain_csv(dom, dir + "/domain_" + std::to_string(dom.id) + ".csv");

  nlohmann::json m;
  m["seed"] = ds.config.seed;
  m["config_hash"] = config_hash;
  m["n_train"] = static_cast<int>(ds.train.size());
  m["n_test_random"] = static_cast<int>(ds.test_random.size());
  m["n_test_mesh"] = static_cast<int>(ds.test_mesh.size());
  m["descriptor_dim"] = d;
  m["imperfection"] = {{"kind", to_string(ds.config.imperfection.kind)},
                       {"noise_dims", ds.config.imperfection.noise_dims},
                       {"projection_dim", ds.config.imperfection.projection_dim},
                       {"drop_count", ds.config.imperfection.drop_count},
                       {"seed", ds.config.imperfection.seed}};
  m["scale_law"] =
      ds.config.moons.scale_law == ScaleLaw::compound ? "compound" : "linear";
  m["noise_std"] = ds.config.moons.noise_std;
  m["n_per_class"] = ds.config.moons.n_per_class;
  auto clean = nlohmann::json::array();
  for (const auto* list : {&ds.clean_train, &ds.clean_test_random, &ds.clean_test_mesh})
    for (const auto& z : *list) clean.push_back(z);
  m["clean_descriptors"] = clean;
  write_file(dir + "/manifest.json", m.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  auto rows = read_csv(dir + "/descriptors.csv");
  if (rows.size() < 2) throw IoError("empty descriptors.csv in " + dir);
  const auto& head = rows[0];
  if (head.size() < 3 || head[0] != "id" || head[1] != "split")
    throw IoError("bad descriptors.csv header in " + dir);
  int d = static_cast<int>(head.size()) - 2;

  Dataset ds;
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  } catch (const std::exception& e) {
    throw IoError(std::string("bad manifest.json: ") + e.what());
  }
  ds.config.seed = m.value("seed", 0ULL);
  ds.config.moons.noise_std = m.value("noise_std", 0.1);
  ds.config.moons.n_per_class = m.value("n_per_class", 500);
  ds.config.moons.scale_law =
      m.value("scale_law", "compound") == std::string("linear") ? ScaleLaw::linear
                                                                : ScaleLaw::compound;
  if (m.contains("imperfection")) {
    const auto& im = m["imperfection"];
    ds.config.imperfection.kind =
        imperfection_kind_from_string(im.value("kind", "none"));
    ds.config.imperfection.noise_dims = im.value("noise_dims", 0);
    ds.config.imperfection.projection_dim = im.value("projection_dim", 8);
    ds.config.imperfection.drop_count = im.value("drop_count", 0);
    ds.config.imperfection.seed = im.value("seed", 0ULL);
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (static_cast<int>(row.size()) != d + 2)
      throw IoError("bad descriptors.csv row in " + dir);
    int id = std::stoi(row[0]);
    Descriptor z(d);
    for (int j = 0; j < d; ++j) z[j] = std::stod(row[j + 2]);
    Domain dom = load_domain_csv(dir + "/domain_" + std::to_string(id) + ".csv", id);
    dom.descriptor = std::move(z);
    if (row[1] == "train") ds.train.push_back(std::move(dom));
    else if (row[1] == "test_random") ds.test_random.push_back(std::move(dom));
    else if (row[1] == "test_mesh") ds.test_mesh.push_back(std::move(dom));
    else throw IoError("unknown split '" + row[1] + "' in " + dir);
  }
  return ds;
}

}  // namespace lio
