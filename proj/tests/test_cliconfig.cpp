#include <doctest.h>

#include <string>

#include "lio/config.hpp"
#include "lio/errors.hpp"

using namespace lio;

TEST_CASE("text config parses nested blocks and applies keys") {
  std::string text = R"(
# experiment settings
output_dir = "runs/exp1"
dataset {
  n_train = 12
  seed = 44
  imperfection {
    kind = noisy
    noise_dims = 3
  }
}
train {
  epochs = 40
  learning_rate = 0.002
  weights {
    recon = 2.5
  }
}
eval {
  sweep_seeds = 4 5
  domain_counts = 5 10 20
}
)";
  ExperimentConfig cfg = config_from_map(parse_config_text(text));
  CHECK_EQ(cfg.output_dir, "runs/exp1");
  CHECK_EQ(cfg.dataset.n_train, 12);
  CHECK_EQ(cfg.dataset.seed, 44);
  CHECK_EQ(cfg.dataset.imperfection.kind, ImperfectionKind::noisy);
  CHECK_EQ(cfg.dataset.imperfection.noise_dims, 3);
  CHECK_EQ(cfg.train.epochs, 40);
  CHECK_EQ(cfg.train.learning_rate, doctest::Approx(0.002).epsilon(1e-15));
  CHECK_EQ(cfg.train.weights.recon, 2.5);
  CHECK_EQ(cfg.train.weights.pred_self, 1.0);  // untouched default
  CHECK_EQ(cfg.eval.sweep_seeds, std::vector<std::uint64_t>{4, 5});
  CHECK_EQ(cfg.eval.domain_counts, std::vector<int>{5, 10, 20});
  // untouched defaults survive
  CHECK_EQ(cfg.dataset.n_test, 150);
  CHECK_EQ(cfg.train.k, 5);
  CHECK_EQ(cfg.eval.manifold_mesh, 21);
}

TEST_CASE("json config produces the same result as text") {
  std::string text = R"(
dataset {
  n_train = 9
  mesh_per_axis = 7
}
train {
  epochs = 11
}
arch {
  widths = 2 16 2
}
)";
  std::string json = R"({
  "dataset": {"n_train": 9, "mesh_per_axis": 7},
  "train": {"epochs": 11},
  "arch": {"widths": [2, 16, 2]}
})";
  ExperimentConfig a = config_from_map(parse_config_text(text));
  ExperimentConfig b = config_from_map(parse_config_json(json));
  CHECK_EQ(a.dataset.n_train, 9);
  CHECK_EQ(b.train.arch.widths, std::vector<int>{2, 16, 2});
  CHECK_EQ(resolved_config_text(a), resolved_config_text(b));
  CHECK_EQ(config_hash(a), config_hash(b));
}

TEST_CASE("config rejects malformed input by name") {
  auto apply = [](const std::string& text) {
    return config_from_map(parse_config_text(text));
  };
  // misspelled key and unknown block
  CHECK_THROWS_AS(apply("dataset {\n n_trian = 3\n}\n"), ArgumentError);
  CHECK_THROWS_AS(apply("typo_block {\n x = 1\n}\n"), ArgumentError);
  // duplicate key across reopened blocks
  CHECK_THROWS_AS(parse_config_text("train {\n epochs = 1\n}\ntrain {\n epochs = 2\n}\n"),
                  ArgumentError);
  // wrong arity and missing value
  CHECK_THROWS_AS(apply("train {\n epochs = 1 2\n}\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("train {\n epochs =\n}\n"), ArgumentError);
  // unparsable number
  CHECK_THROWS_AS(apply("train {\n epochs = soon\n}\n"), ArgumentError);
  // unbalanced braces
  CHECK_THROWS_AS(parse_config_text("train {\n epochs = 1\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("}\n"), ArgumentError);
  // bad enum value
  CHECK_THROWS_AS(apply("dataset {\n imperfection {\n  kind = fuzzy\n }\n}\n"),
                  ArgumentError);
  // json surface: bad syntax, non-object root, nested array
  CHECK_THROWS_AS(parse_config_json("{not json"), ArgumentError);
  CHECK_THROWS_AS(parse_config_json("[1, 2]"), ArgumentError);
  CHECK_THROWS_AS(parse_config_json(R"({"train": {"epochs": [[1]]}})"),
                  ArgumentError);
}

TEST_CASE("resolved text round trips to an identical config") {
  ExperimentConfig cfg;
  cfg.output_dir = "elsewhere";
  cfg.dataset.n_train = 17;
  cfg.dataset.imperfection.kind = ImperfectionKind::incomplete;
  cfg.dataset.imperfection.drop_count = 4;
  cfg.train.epochs = 55;
  cfg.train.variant.no_gate = true;
  cfg.train.weights.embed = 0.5;
  cfg.train.learning_rate = 1.0 / 3.0;  // exercises 17-digit round trip
  cfg.eval.spearman_max = -0.75;

  std::string text = resolved_config_text(cfg);
  ExperimentConfig back = config_from_map(parse_config_text(text));
  CHECK_EQ(resolved_config_text(back), text);
  CHECK_EQ(back.dataset.n_train, 17);
  CHECK_EQ(back.dataset.imperfection.drop_count, 4);
  CHECK_EQ(back.train.variant.no_gate, true);
  CHECK_EQ(back.train.learning_rate, cfg.train.learning_rate);
  CHECK_EQ(back.eval.spearman_max, -0.75);
  CHECK_EQ(back.output_dir, "elsewhere");
  CHECK_EQ(config_hash(back), config_hash(cfg));
}

TEST_CASE("hash identifies the experiment, not its output location") {
  ExperimentConfig a;
  ExperimentConfig b;
  b.output_dir = "completely/different";
  CHECK_EQ(config_hash(a), config_hash(b));

  ExperimentConfig c;
  c.train.seed = 999;
  CHECK_NE(config_hash(a), config_hash(c));

  ExperimentConfig d;
  d.dataset.imperfection.kind = ImperfectionKind::redundant;
  CHECK_NE(config_hash(a), config_hash(d));

  // 16 lowercase hex digits, stable across calls
  std::string h = config_hash(a);
  CHECK_EQ(h.size(), 16);
  for (char ch : h) CHECK(((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f')));
  CHECK_EQ(config_hash(a), h);
}

TEST_CASE("fnv1a64 known vectors") {
  // standard FNV-1a test vectors
  CHECK_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  CHECK_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  CHECK_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}
