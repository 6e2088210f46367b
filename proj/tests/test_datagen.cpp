#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lio/datagen.hpp"
#include "lio/errors.hpp"

using namespace lio;

namespace {

struct Point2 {
  double x, y;
};

Point2 centroid_of(const Tensor& inputs) {
  double cx = 0.0, cy = 0.0;
  int n = inputs.rows();
  for (int i = 0; i < n; ++i) {
    cx += inputs.at(i, 0);
    cy += inputs.at(i, 1);
  }
  return {cx / n, cy / n};
}

// axis-aligned decision tree with exhaustive gini splits, used as a
// separability oracle
struct TreeNode {
  int axis = -1;
  double threshold = 0.0;
  int leaf_label = -1;
  std::unique_ptr<TreeNode> lo, hi;
};

int majority(const std::vector<int>& labels, const std::vector<int>& idx) {
  int ones = 0;
  for (int i : idx) ones += labels[i];
  return 2 * ones >= static_cast<int>(idx.size()) ? 1 : 0;
}

std::unique_ptr<TreeNode> fit_tree(const Tensor& inputs,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& idx, int depth) {
  auto node = std::make_unique<TreeNode>();
  node->leaf_label = majority(labels, idx);
  if (depth == 0 || idx.size() < 2) return node;

  double n = static_cast<double>(idx.size());
  int total_ones = 0;
  for (int i : idx) total_ones += labels[i];

  double best_gini = 2.0;
  int best_axis = -1;
  double best_thr = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<int> order = idx;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return inputs.at(a, axis) < inputs.at(b, axis);
    });
    int left_ones = 0;
    for (std::size_t p = 0; p + 1 < order.size(); ++p) {
      left_ones += labels[order[p]];
      double lo_v = inputs.at(order[p], axis);
      double hi_v = inputs.at(order[p + 1], axis);
      if (lo_v == hi_v) continue;
      double nl = static_cast<double>(p + 1), nr = n - nl;
      double pl = left_ones / nl;
      double pr = (total_ones - left_ones) / nr;
      double gini = (nl / n) * 2.0 * pl * (1.0 - pl) +
                    (nr / n) * 2.0 * pr * (1.0 - pr);
      if (gini < best_gini) {
        best_gini = gini;
        best_axis = axis;
        best_thr = 0.5 * (lo_v + hi_v);
      }
    }
  }
  if (best_axis < 0) return node;
  std::vector<int> lo, hi;
  for (int i : idx) (inputs.at(i, best_axis) < best_thr ? lo : hi).push_back(i);
  if (lo.empty() || hi.empty()) return node;
  node->axis = best_axis;
  node->threshold = best_thr;
  node->lo = fit_tree(inputs, labels, lo, depth - 1);
  node->hi = fit_tree(inputs, labels, hi, depth - 1);
  return node;
}

int tree_predict(const TreeNode* t, double x, double y) {
  while (t->axis >= 0)
    t = ((t->axis == 0 ? x : y) < t->threshold) ? t->lo.get() : t->hi.get();
  return t->leaf_label;
}

}  // namespace

TEST_CASE("base moons counts and noiseless geometry") {
  Tensor inputs;
  std::vector<int> labels;
  make_base_moons(500, 0.1, 3, inputs, labels);
  REQUIRE_EQ(inputs.rows(), 1000);
  REQUIRE_EQ(labels.size(), 1000);
  CHECK_EQ(std::count(labels.begin(), labels.end(), 0), 500);
  CHECK_EQ(std::count(labels.begin(), labels.end(), 1), 500);

  Tensor clean;
  std::vector<int> clean_labels;
  make_base_moons(200, 0.0, 3, clean, clean_labels);
  for (int i = 0; i < clean.rows(); ++i) {
    double x = clean.at(i, 0), y = clean.at(i, 1);
    if (clean_labels[i] == 0) {
      // lower moon: (1 - cos t, 0.5 - sin t)
      double c = 1.0 - x, s = 0.5 - y;
      CHECK_EQ(c * c + s * s, doctest::Approx(1.0).epsilon(1e-12));
      CHECK_GE(s, -1e-12);  // sin t >= 0 on [0, pi]
    } else {
      // upper moon: (cos t, sin t)
      CHECK_EQ(x * x + y * y, doctest::Approx(1.0).epsilon(1e-12));
      CHECK_GE(y, -1e-12);
    }
  }
}

TEST_CASE("moon classes are separable by a shallow tree") {
  Tensor inputs;
  std::vector<int> labels;
  make_base_moons(500, 0.1, 7, inputs, labels);
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  auto tree = fit_tree(inputs, labels, idx, 5);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    correct += tree_predict(tree.get(), inputs.at(i, 0), inputs.at(i, 1)) ==
               labels[i];
  CHECK_GE(correct, static_cast<int>(0.95 * labels.size()));
}

TEST_CASE("domain transformation against rotation and scale oracles") {
  const std::uint64_t seed = 11;
  Tensor base;
  std::vector<int> base_labels;
  MoonParams params;
  params.n_per_class = 100;
  make_base_moons(params.n_per_class, params.noise_std, seed, base, base_labels);
  Point2 c = centroid_of(base);

  Domain identity = make_domain({0.0, 0.0}, seed, params);
  REQUIRE_EQ(identity.inputs.rows(), base.rows());
  for (int i = 0; i < base.rows(); ++i) {
    CHECK_EQ(identity.inputs.at(i, 0), doctest::Approx(base.at(i, 0)).epsilon(1e-14));
    CHECK_EQ(identity.inputs.at(i, 1), doctest::Approx(base.at(i, 1)).epsilon(1e-14));
  }
  CHECK_EQ(identity.labels, base_labels);

  // z2 = 10 -> 180 degrees: centered coordinates negate
  Domain flipped = make_domain({0.0, 10.0}, seed, params);
  for (int i = 0; i < base.rows(); ++i) {
    CHECK_EQ(flipped.inputs.at(i, 0),
             doctest::Approx(c.x - (base.at(i, 0) - c.x)).epsilon(1e-10));
    CHECK_EQ(flipped.inputs.at(i, 1),
             doctest::Approx(c.y - (base.at(i, 1) - c.y)).epsilon(1e-10));
  }

  // z1 = 1 -> every centered coordinate scaled by exactly 1.1
  Domain scaled = make_domain({1.0, 0.0}, seed, params);
  for (int i = 0; i < base.rows(); ++i) {
    CHECK_EQ(scaled.inputs.at(i, 0),
             doctest::Approx(c.x + 1.1 * (base.at(i, 0) - c.x)).epsilon(1e-12));
    CHECK_EQ(scaled.inputs.at(i, 1),
             doctest::Approx(c.y + 1.1 * (base.at(i, 1) - c.y)).epsilon(1e-12));
  }

  // general point: scale-then-rotate equals rotate-then-scale about the centroid
  Descriptor z = {2.0, 3.0};
  double s = std::pow(1.1, z[0]);
  double ang = 18.0 * z[1] * M_PI / 180.0;
  Domain dom = make_domain(z, seed, params);
  for (int i = 0; i < base.rows(); ++i) {
    double px = base.at(i, 0) - c.x, py = base.at(i, 1) - c.y;
    double sr_x = std::cos(ang) * (s * px) - std::sin(ang) * (s * py);
    double sr_y = std::sin(ang) * (s * px) + std::cos(ang) * (s * py);
    double rs_x = s * (std::cos(ang) * px - std::sin(ang) * py);
    double rs_y = s * (std::sin(ang) * px + std::cos(ang) * py);
    CHECK_EQ(sr_x, doctest::Approx(rs_x).epsilon(1e-12));
    CHECK_EQ(sr_y, doctest::Approx(rs_y).epsilon(1e-12));
    CHECK_EQ(dom.inputs.at(i, 0), doctest::Approx(c.x + sr_x).epsilon(1e-10));
    CHECK_EQ(dom.inputs.at(i, 1), doctest::Approx(c.y + sr_y).epsilon(1e-10));
  }
  CHECK_EQ(dom.labels, base_labels);

  // determinism: identical call, identical bits
  Domain again = make_domain(z, seed, params);
  for (int i = 0; i < base.rows(); ++i) {
    CHECK_EQ(dom.inputs.at(i, 0), again.inputs.at(i, 0));
    CHECK_EQ(dom.inputs.at(i, 1), again.inputs.at(i, 1));
  }
}

TEST_CASE("descriptor set sampling") {
  Box box;
  DescriptorSets sets = sample_descriptor_sets(50, 150, 11, box, 5);
  CHECK_EQ(sets.train.size(), 50);
  CHECK_EQ(sets.test_random.size(), 150);
  REQUIRE_EQ(sets.test_mesh.size(), 121);

  // regular grid with spacing exactly 1.0 over [0,10]^2
  std::set<double> axis_vals;
  for (const auto& z : sets.test_mesh) axis_vals.insert(z[0]);
  REQUIRE_EQ(axis_vals.size(), 11);
  double prev = -1.0;
  for (double v : axis_vals) {
    if (prev >= 0.0) CHECK_EQ(v - prev, doctest::Approx(1.0).epsilon(1e-12));
    prev = v;
  }
  CHECK_EQ(*axis_vals.begin(), 0.0);
  CHECK_EQ(*axis_vals.rbegin(), 10.0);

  // no exact duplicates between train and random test draws
  std::set<std::pair<double, double>> train_set;
  for (const auto& z : sets.train) train_set.insert({z[0], z[1]});
  for (const auto& z : sets.test_random)
    CHECK_EQ(train_set.count({z[0], z[1]}), 0);

  for (const auto& z : sets.train) {
    CHECK_GE(z[0], 0.0);
    CHECK_LE(z[0], 10.0);
    CHECK_GE(z[1], 0.0);
    CHECK_LE(z[1], 10.0);
  }
}

TEST_CASE("imperfections transform descriptors as specified") {
  std::vector<Descriptor> zs = {{1.0, 2.0}, {3.5, 0.25}, {9.0, 7.0}};

  ImperfectionSpec none;
  none.kind = ImperfectionKind::noisy;
  none.noise_dims = 0;
  auto same = apply_imperfection(zs, none);
  CHECK_EQ(same, zs);

  ImperfectionSpec noisy;
  noisy.kind = ImperfectionKind::noisy;
  noisy.noise_dims = 3;
  noisy.seed = 4;
  auto nz = apply_imperfection(zs, noisy);
  REQUIRE_EQ(nz.size(), 3);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    REQUIRE_EQ(nz[i].size(), 5);
    CHECK_EQ(nz[i][0], zs[i][0]);  // first two coordinates bit-identical
    CHECK_EQ(nz[i][1], zs[i][1]);
    for (int d = 2; d < 5; ++d) {
      CHECK_GE(nz[i][d], 0.0);
      CHECK_LE(nz[i][d], 10.0);
    }
  }

  ImperfectionSpec red;
  red.kind = ImperfectionKind::redundant;
  red.projection_dim = 6;
  red.seed = 9;
  ImperfectionResult rr = apply_imperfection_full(zs, red);
  REQUIRE_EQ(rr.descriptors[0].size(), 6);
  REQUIRE_EQ(rr.projection.rows(), 6);
  REQUIRE_EQ(rr.projection.cols(), 2);
  // least-squares inversion of A recovers the original descriptor
  for (std::size_t i = 0; i < zs.size(); ++i) {
    double ata[4] = {0, 0, 0, 0}, atv[2] = {0, 0};
    for (int r = 0; r < 6; ++r) {
      double a0 = rr.projection.at(r, 0), a1 = rr.projection.at(r, 1);
      ata[0] += a0 * a0;
      ata[1] += a0 * a1;
      ata[2] += a1 * a0;
      ata[3] += a1 * a1;
      atv[0] += a0 * rr.descriptors[i][r];
      atv[1] += a1 * rr.descriptors[i][r];
    }
    double det = ata[0] * ata[3] - ata[1] * ata[2];
    REQUIRE_NE(det, 0.0);
    double z0 = (ata[3] * atv[0] - ata[1] * atv[1]) / det;
    double z1 = (-ata[2] * atv[0] + ata[0] * atv[1]) / det;
    CHECK_EQ(z0, doctest::Approx(zs[i][0]).epsilon(1e-10));
    CHECK_EQ(z1, doctest::Approx(zs[i][1]).epsilon(1e-10));
  }

  ImperfectionSpec inc;
  inc.kind = ImperfectionKind::incomplete;
  inc.projection_dim = 8;
  inc.drop_count = 7;
  inc.seed = 2;
  ImperfectionResult ir = apply_imperfection_full(zs, inc);
  REQUIRE_EQ(ir.descriptors[0].size(), 1);
  CHECK_EQ(ir.dropped.size(), 7);

  inc.drop_count = 3;
  ImperfectionResult ir3 = apply_imperfection_full(zs, inc);
  REQUIRE_EQ(ir3.descriptors[0].size(), 5);
  // the same positions are dropped for every descriptor: verify against the
  // full redundant view
  ImperfectionSpec red8;
  red8.kind = ImperfectionKind::redundant;
  red8.projection_dim = 8;
  red8.seed = 2;
  auto full8 = apply_imperfection(zs, red8);
  std::set<int> dropped(ir3.dropped.begin(), ir3.dropped.end());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    std::size_t out = 0;
    for (int d = 0; d < 8; ++d)
      if (!dropped.count(d)) CHECK_EQ(ir3.descriptors[i][out++], full8[i][d]);
  }
}

TEST_CASE("dataset assembly and disk round trip") {
  DatasetConfig cfg;
  cfg.n_train = 6;
  cfg.n_test = 4;
  cfg.mesh_per_axis = 3;
  cfg.moons.n_per_class = 30;
  cfg.seed = 13;
  Dataset ds = make_dataset(cfg);

  CHECK_EQ(ds.train.size(), 6);
  CHECK_EQ(ds.test_random.size(), 4);
  CHECK_EQ(ds.test_mesh.size(), 9);
  CHECK_EQ(ds.all_test().size(), 13);
  CHECK_EQ(ds.descriptor_dim(), 2);
  for (const auto& d : ds.train) {
    CHECK_EQ(d.inputs.rows(), 60);
    CHECK_EQ(d.labels.size(), 60);
    CHECK_EQ(std::count(d.labels.begin(), d.labels.end(), 0), 30);
  }
  // ids are unique across the whole dataset (6 train + 13 test)
  std::set<int> ids;
  for (const auto& d : ds.train) ids.insert(d.id);
  for (const auto* d : ds.all_test()) ids.insert(d->id);
  CHECK_EQ(ids.size(), 19);

  cfg.imperfection.kind = ImperfectionKind::noisy;
  cfg.imperfection.noise_dims = 2;
  cfg.imperfection.seed = 77;
  Dataset noisy = make_dataset(cfg);
  CHECK_EQ(noisy.descriptor_dim(), 4);
  CHECK_EQ(noisy.clean_train[0].size(), 2);
  CHECK_EQ(noisy.train[0].descriptor.size(), 4);
  // data generation still follows the clean coordinates
  Domain expect = make_domain(noisy.clean_train[0], cfg.seed, cfg.moons);
  for (int i = 0; i < expect.inputs.rows(); ++i)
    CHECK_EQ(noisy.train[0].inputs.at(i, 0), expect.inputs.at(i, 0));

  std::string dir = "/tmp/liodg_ds_roundtrip";
  std::filesystem::remove_all(dir);
  write_dataset(ds, dir, "deadbeefdeadbeef");
  Dataset back = load_dataset(dir);
  REQUIRE_EQ(back.train.size(), ds.train.size());
  REQUIRE_EQ(back.all_test().size(), ds.all_test().size());
  for (std::size_t d = 0; d < ds.train.size(); ++d) {
    CHECK_EQ(back.train[d].id, ds.train[d].id);
    CHECK_EQ(back.train[d].descriptor, ds.train[d].descriptor);
    CHECK_EQ(back.train[d].labels, ds.train[d].labels);
    for (std::size_t i = 0; i < ds.train[d].inputs.numel(); ++i)
      CHECK_EQ(back.train[d].inputs.values()[i], ds.train[d].inputs.values()[i]);
  }
  std::filesystem::remove_all(dir);
}
