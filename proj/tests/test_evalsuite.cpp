#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/evalsuite.hpp"

using namespace lio;

namespace {

std::vector<Domain> toy_domains(int n, std::uint64_t seed) {
  MoonParams mp;
  mp.n_per_class = 15;
  Rng rng(seed);
  std::vector<Domain> out;
  for (int i = 0; i < n; ++i) {
    Descriptor z = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    Domain d = make_domain(z, seed, mp);
    d.id = i;
    out.push_back(std::move(d));
  }
  return out;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.arch.widths = {2, 8, 2};
  cfg.m = 8;
  cfg.B = 2;
  cfg.encoder_hidden = {32, 16};
  cfg.field_hidden = 8;
  cfg.plain_hidden = {16};
  cfg.epochs = 6;
  cfg.minibatch_domains = 6;
  cfg.k = 3;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("spearman rank correlation") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  CHECK_EQ(spearman(x, {10, 20, 30, 40, 50}), doctest::Approx(1.0).epsilon(1e-12));
  CHECK_EQ(spearman(x, {50, 40, 30, 20, 10}), doctest::Approx(-1.0).epsilon(1e-12));
  // classic hand-ranked example: ranks of y are (2,1,4,3,5)
  CHECK_EQ(spearman(x, {2.0, 1.0, 4.0, 3.0, 5.0}),
           doctest::Approx(0.8).epsilon(1e-12));
  // monotone but nonlinear is still a perfect rank correlation
  CHECK_EQ(spearman(x, {1.0, 8.0, 27.0, 64.0, 125.0}),
           doctest::Approx(1.0).epsilon(1e-12));
  // ties get averaged ranks: y ranks become (1.5, 1.5, 3) against (1, 2, 3),
  // Pearson of that is sqrt(3)/2
  CHECK_EQ(spearman({1, 2, 3}, {5.0, 5.0, 9.0}),
           doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
  // degenerate: no variance in one input
  CHECK_EQ(spearman({1, 2, 3}, {4.0, 4.0, 4.0}), 0.0);
  CHECK_THROWS_AS(spearman({1.0}, {1.0, 2.0}), ArgumentError);
}

TEST_CASE("evaluate averages per-domain inference errors") {
  auto domains = toy_domains(6, 41);
  TrainedState st = train(domains, toy_config());

  auto tests = toy_domains(3, 43);
  std::vector<const Domain*> ptrs;
  for (auto& d : tests) ptrs.push_back(&d);
  double err = evaluate(ptrs, st);
  CHECK_GE(err, 0.0);
  CHECK_LE(err, 100.0);

  // oracle: recompute by hand from infer + error_rate
  NoGradGuard ng;
  double expect = 0.0;
  for (const auto* d : ptrs) {
    Tensor theta = infer(d->descriptor, st);
    expect += error_rate(predict(st.store.arch, theta, d->inputs), d->labels);
  }
  expect /= ptrs.size();
  CHECK_EQ(err, doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate({}, st), ArgumentError);

  double self_err = oracle_train_error(domains, st);
  CHECK_GE(self_err, 0.0);
  CHECK_LE(self_err, 100.0);
}

TEST_CASE("structure report is sampled independently of descriptor order") {
  auto domains = toy_domains(6, 51);
  TrainedState st = train(domains, toy_config());

  std::vector<Descriptor> zs;
  Rng rng(8);
  for (int i = 0; i < 12; ++i)
    zs.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});

  StructureReport a = verify_structure(zs, st, 50, 9001);
  CHECK_EQ(a.identity_n, 12);
  CHECK_GE(a.associativity_n, 50);
  CHECK_GE(a.invertibility_n, 50);
  CHECK_GE(a.identity_cos, -1.0);
  CHECK_LE(a.identity_cos, 1.0 + 1e-12);

  StructureReport b = verify_structure(zs, st, 50, 9001);
  CHECK_EQ(a.identity_cos, b.identity_cos);
  CHECK_EQ(a.associativity_cos, b.associativity_cos);
  CHECK_EQ(a.invertibility_cos, b.invertibility_cos);

  // untrained operator: latent transport is the exact identity, so latent
  // cosines are 1 even though the decoded theta round trip is lossy
  TrainConfig zero = toy_config();
  zero.epochs = 0;
  TrainedState raw = train(domains, zero);
  LatentStructureDiag diag;
  verify_structure(zs, raw, 20, 9001, &diag);
  CHECK_EQ(diag.identity_cos, doctest::Approx(1.0).epsilon(1e-14));
  CHECK_EQ(diag.associativity_cos, doctest::Approx(1.0).epsilon(1e-12));
  CHECK_EQ(diag.invertibility_cos, doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sweep results aggregate by level and variant") {
  SweepResult r;
  r.axis = "noise_dims";
  r.rows = {{0, "gated", 1, 10.0},  {0, "gated", 2, 14.0},
            {0, "ungated", 1, 20.0}, {1, "gated", 1, 30.0},
            {1, "gated", 2, 34.0},  {1, "ungated", 1, 44.0}};
  CHECK_EQ(r.levels(), std::vector<double>{0.0, 1.0});
  CHECK_EQ(r.mean_error(0, "gated"), doctest::Approx(12.0).epsilon(1e-12));
  CHECK_EQ(r.mean_error(1, "gated"), doctest::Approx(32.0).epsilon(1e-12));
  CHECK_EQ(r.mean_error(1, "ungated"), doctest::Approx(44.0).epsilon(1e-12));
  // sample standard deviation of {10, 14}
  CHECK_EQ(r.stddev_error(0, "gated"), doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK_EQ(r.stddev_error(1, "ungated"), 0.0);
}

TEST_CASE("manifold export projects inferred parameters") {
  auto domains = toy_domains(6, 61);
  TrainedState st = train(domains, toy_config());

  Box box;
  DescriptorSets sets = sample_descriptor_sets(0, 0, 5, box, 3);
  REQUIRE_EQ(sets.test_mesh.size(), 25);
  ManifoldExport ex = export_manifold(sets.test_mesh, 5, st);
  CHECK_EQ(ex.projected.rows(), 25);
  CHECK_EQ(ex.projected.cols(), 3);
  CHECK_EQ(ex.components.rows(), 3);
  CHECK_EQ(ex.components.cols(), st.store.arch.param_count());
  REQUIRE_EQ(ex.explained_variance.size(), 3);
  CHECK_GE(ex.explained_variance[0], ex.explained_variance[1]);
  CHECK_GE(ex.explained_variance[1], ex.explained_variance[2]);

  // principal directions are orthonormal
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int c = 0; c < ex.components.cols(); ++c)
        dot += ex.components.at(a, c) * ex.components.at(b, c);
      CHECK_LE(std::abs(dot - (a == b ? 1.0 : 0.0)), 1e-8);
    }
  CHECK_GT(ex.mean_adjacent_distance, 0.0);
  CHECK_GT(ex.mean_random_distance, 0.0);
}

TEST_CASE("csv writers stamp the config hash on every row") {
  std::string path = "/tmp/liodg_eval_csv_test.csv";

  SweepResult r;
  r.axis = "noise_dims";
  r.rows = {{0, "gated", 1, 10.0}, {2, "ungated", 3, 20.5}};
  write_sweep_csv(path, r, "abc123");
  auto rows = read_csv(path);
  REQUIRE_EQ(rows.size(), 3);
  CHECK_EQ(rows[0][0], "level");
  CHECK_EQ(rows[0].back(), "config_hash");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK_EQ(rows[i].back(), "abc123");
  CHECK_EQ(std::stod(rows[2][3]), 20.5);

  StructureReport sr;
  sr.identity_cos = 0.9991;
  sr.associativity_cos = 0.985;
  sr.invertibility_cos = 0.971;
  sr.identity_n = 121;
  sr.associativity_n = 2000;
  sr.invertibility_n = 2000;
  write_structure_csv(path, sr, "feed01");
  rows = read_csv(path);
  REQUIRE_EQ(rows.size(), 4);  // header + one row per property
  CHECK_EQ(rows[0][0], "property");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK_EQ(rows[i].back(), "feed01");
  CHECK_EQ(rows[1][0], "identity");
  CHECK_EQ(std::stod(rows[1][1]), 0.9991);
  CHECK_EQ(std::stoi(rows[1][2]), 121);

  write_results_main(path, {{"full", "mesh", 7, 3.25}}, "0ff");
  rows = read_csv(path);
  REQUIRE_EQ(rows.size(), 2);
  CHECK_EQ(rows[1][0], "full");
  CHECK_EQ(rows[1][1], "mesh");
  CHECK_EQ(std::stod(rows[1][3]), 3.25);
  CHECK_EQ(rows[1].back(), "0ff");

  std::remove(path.c_str());
}
