#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lio/errors.hpp"
#include "lio/gradcheck.hpp"
#include "lio/transport.hpp"

using namespace lio;

namespace {

OperatorConfig small_config() {
  OperatorConfig cfg;
  cfg.D = 6;
  cfg.d = 2;
  cfg.m = 4;
  cfg.B = 2;
  cfg.encoder_hidden = {8};
  cfg.field_hidden = 6;
  cfg.plain_hidden = {8};
  cfg.k = 2;
  return cfg;
}

Tensor row2(double a, double b) { return Tensor::from_values({1, 2}, {a, b}); }

// pin one basis field to a constant matrix by writing its zero-initialized
// output layer bias (output weights stay zero, so the field ignores z)
void pin_field(Mlp& field, const std::vector<double>& matrix) {
  field.layers.back().b.mutable_values() = matrix;
}

}  // namespace

TEST_CASE("gate endpoints and neutrality") {
  Gate g;
  g.W = Tensor::zeros({2, 2});
  g.w = Tensor::from_values({1, 2}, {2.0, 2.0});
  Tensor zi = row2(3.0, -1.5);
  Tensor zj = row2(0.25, 8.0);

  // sigmoid(0) * 2 = 1: the initial gate passes descriptors through exactly
  auto [gi, gj] = gate_descriptors(zi, zj, g);
  for (int c = 0; c < 2; ++c) {
    CHECK_EQ(gi.at(0, c), zi.at(0, c));
    CHECK_EQ(gj.at(0, c), zj.at(0, c));
  }

  // zero amplitude w kills every coordinate
  Gate dead;
  dead.W = Tensor::from_values({2, 2}, {0.3, -0.2, 0.1, 0.4});
  dead.w = Tensor::zeros({1, 2});
  auto [di, dj] = gate_descriptors(zi, zj, dead);
  for (int c = 0; c < 2; ++c) {
    CHECK_EQ(di.at(0, c), 0.0);
    CHECK_EQ(dj.at(0, c), 0.0);
  }

  // both endpoints use the SOURCE gate: swapping arguments changes outputs
  Gate mixed;
  mixed.W = Tensor::from_values({2, 2}, {0.9, -0.4, 0.2, 0.7});
  mixed.w = Tensor::from_values({1, 2}, {1.5, 0.5});
  auto [mi, mj] = gate_descriptors(zi, zj, mixed);
  auto [ri, rj] = gate_descriptors(zj, zi, mixed);
  // gated z_j under source z_i differs from gated z_j under source z_j
  bool differs = false;
  for (int c = 0; c < 2; ++c)
    if (mj.at(0, c) != ri.at(0, c)) differs = true;
  CHECK(differs);

  // bypass ignores the gate entirely
  auto [bi, bj] = gate_descriptors(zi, zj, mixed, true);
  for (int c = 0; c < 2; ++c) {
    CHECK_EQ(bi.at(0, c), zi.at(0, c));
    CHECK_EQ(bj.at(0, c), zj.at(0, c));
  }
}

TEST_CASE("gate gradients") {
  Tensor zi = row2(1.0, 2.0);
  Tensor zj = row2(-0.5, 3.0);
  Tensor W0 = Tensor::from_values({2, 2}, {0.3, -0.2, 0.1, 0.4}, true);
  Tensor w0 = Tensor::from_values({1, 2}, {1.2, 0.7}, true);
  double rel_w = grad_check(
      [&](const Tensor& W) {
        Gate g{W, w0};
        auto [gi, gj] = gate_descriptors(zi, zj, g);
        return add(sum_sq(gi), sum_sq(gj));
      },
      W0);
  CHECK_LT(rel_w, 1e-5);
  double rel_a = grad_check(
      [&](const Tensor& w) {
        Gate g{W0, w};
        auto [gi, gj] = gate_descriptors(zi, zj, g);
        return add(sum_sq(gi), sum_sq(gj));
      },
      w0);
  CHECK_LT(rel_a, 1e-5);
}

TEST_CASE("fresh operator transports the latent as the exact identity") {
  Rng rng(5);
  TransportOperator op = make_operator(small_config(), rng);
  Tensor e = Tensor::from_values({1, 4}, {0.7, -2.3, 1.1, 0.05});
  for (auto [za, zb] : {std::pair{row2(1.0, 2.0), row2(1.0, 2.0)},
                        std::pair{row2(9.0, 0.0), row2(9.0, 0.0)}}) {
    auto [gi, gj] = gate_descriptors(za, zb, op.gate);
    Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
    for (int c = 0; c < 4; ++c)
      CHECK_LE(std::abs(out.at(0, c) - e.at(0, c)), 1e-14);
  }

  // even between distinct descriptors the untrained fields are zero, so the
  // cascade is still the identity
  auto [gi, gj] = gate_descriptors(row2(0.0, 0.0), row2(7.0, 3.0), op.gate);
  Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
  for (int c = 0; c < 4; ++c)
    CHECK_LE(std::abs(out.at(0, c) - e.at(0, c)), 1e-14);
}

TEST_CASE("untrained parameter transport reduces to the autoencoder") {
  Rng rng(17);
  TransportOperator op = make_operator(small_config(), rng);
  std::vector<double> raw(6);
  for (auto& v : raw) v = rng.uniform(-1.0, 1.0);
  Tensor theta = Tensor::from_values({1, 6}, std::move(raw));
  Tensor moved = transport_params(op, theta, row2(1.0, 4.0), row2(6.0, 2.0));
  Tensor roundtrip = decode(op, encode(op, theta));
  REQUIRE_EQ(moved.cols(), 6);
  for (int c = 0; c < 6; ++c) CHECK_EQ(moved.at(0, c), roundtrip.at(0, c));
}

TEST_CASE("single rotation field against the closed form") {
  OperatorConfig cfg = small_config();
  cfg.m = 2;
  cfg.B = 1;
  Rng rng(3);
  TransportOperator op = make_operator(cfg, rng);
  // V = [[0,-1],[1,0]]; exp(aV) rotates by a
  pin_field(op.bank.fields[0], {0.0, -1.0, 1.0, 0.0});
  op.bank.coeff_w = Tensor::from_values({2, 1}, {1.0, 0.0});

  Tensor e = Tensor::from_values({1, 2}, {2.0, -1.0});
  double a = 0.8;
  // gate is neutral at init, so gated descriptors equal raw ones
  auto [gi, gj] = gate_descriptors(row2(0.0, 0.0), row2(a, 0.0), op.gate);
  Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
  CHECK_EQ(out.at(0, 0),
           doctest::Approx(std::cos(a) * 2.0 - std::sin(a) * -1.0).epsilon(1e-10));
  CHECK_EQ(out.at(0, 1),
           doctest::Approx(std::sin(a) * 2.0 + std::cos(a) * -1.0).epsilon(1e-10));

  // two hops of a/2 along the same direction compose to the single hop
  auto [h1i, h1j] = gate_descriptors(row2(0.0, 0.0), row2(a / 2, 0.0), op.gate);
  Tensor half = transport_latent(e, h1i, h1j, op.bank, op.variant);
  auto [h2i, h2j] = gate_descriptors(row2(a / 2, 0.0), row2(a, 0.0), op.gate);
  Tensor full = transport_latent(half, h2i, h2j, op.bank, op.variant);
  for (int c = 0; c < 2; ++c)
    CHECK_EQ(full.at(0, c), doctest::Approx(out.at(0, c)).epsilon(1e-8));

  // reverse hop inverts: a then -a returns e
  auto [ri, rj] = gate_descriptors(row2(a, 0.0), row2(0.0, 0.0), op.gate);
  Tensor back = transport_latent(out, ri, rj, op.bank, op.variant);
  for (int c = 0; c < 2; ++c)
    CHECK_EQ(back.at(0, c), doctest::Approx(e.at(0, c)).epsilon(1e-8));
}

TEST_CASE("cascade applies fields in ascending order from the right") {
  OperatorConfig cfg = small_config();
  cfg.m = 2;
  cfg.B = 2;
  Rng rng(4);
  TransportOperator op = make_operator(cfg, rng);
  // field 0: diagonal growth; field 1: rotation. These do not commute, so the
  // order exp(c2 V2) exp(c1 V1) is observable.
  pin_field(op.bank.fields[0], {1.0, 0.0, 0.0, -1.0});
  pin_field(op.bank.fields[1], {0.0, -1.0, 1.0, 0.0});
  op.bank.coeff_w = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});

  double s = 0.5, a = 0.9;
  Tensor e = Tensor::from_values({1, 2}, {1.0, 1.0});
  auto [gi, gj] = gate_descriptors(row2(0.0, 0.0), row2(s, a), op.gate);
  Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
  // exp(s diag(1,-1)) e = (e^s, e^-s); then rotate by a
  double x = std::exp(s), y = std::exp(-s);
  CHECK_EQ(out.at(0, 0), doctest::Approx(std::cos(a) * x - std::sin(a) * y).epsilon(1e-9));
  CHECK_EQ(out.at(0, 1), doctest::Approx(std::sin(a) * x + std::cos(a) * y).epsilon(1e-9));
}

TEST_CASE("no_lie variant applies the summed generator directly") {
  OperatorConfig cfg = small_config();
  cfg.m = 2;
  cfg.B = 1;
  cfg.variant.no_lie = true;
  Rng rng(6);
  TransportOperator op = make_operator(cfg, rng);
  pin_field(op.bank.fields[0], {0.0, -1.0, 1.0, 0.0});
  op.bank.coeff_w = Tensor::from_values({2, 1}, {1.0, 0.0});

  Tensor e = Tensor::from_values({1, 2}, {2.0, -1.0});
  double a = 0.8;
  auto [gi, gj] = gate_descriptors(row2(0.0, 0.0), row2(a, 0.0), op.gate);
  Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
  // a*V e with no exponential: (a*(-e1), a*e0)
  CHECK_EQ(out.at(0, 0), doctest::Approx(a * 1.0).epsilon(1e-12));
  CHECK_EQ(out.at(0, 1), doctest::Approx(a * 2.0).epsilon(1e-12));
}

TEST_CASE("raw_coeffs uses raw descriptor differences as coefficients") {
  OperatorConfig cfg = small_config();
  cfg.m = 2;
  cfg.B = 7;  // ignored: strict mode pins B = d
  cfg.variant.raw_coeffs = true;
  Rng rng(8);
  TransportOperator op = make_operator(cfg, rng);
  REQUIRE_EQ(op.bank.B, 2);
  pin_field(op.bank.fields[0], {0.0, -1.0, 1.0, 0.0});
  pin_field(op.bank.fields[1], {0.0, 0.0, 0.0, 0.0});

  Tensor e = Tensor::from_values({1, 2}, {2.0, -1.0});
  double a = 0.6;
  auto [gi, gj] = gate_descriptors(row2(1.0, 5.0), row2(1.0 + a, 5.0), op.gate);
  Tensor out = transport_latent(e, gi, gj, op.bank, op.variant);
  CHECK_EQ(out.at(0, 0),
           doctest::Approx(std::cos(a) * 2.0 - std::sin(a) * -1.0).epsilon(1e-10));
  CHECK_EQ(out.at(0, 1),
           doctest::Approx(std::sin(a) * 2.0 + std::cos(a) * -1.0).epsilon(1e-10));

  // wrong-width coefficient vector is rejected
  Tensor bad = Tensor::from_values({1, 3}, {0.0, 0.0, 0.0});
  CHECK_THROWS_AS(transport_latent(e, bad, bad, op.bank, op.variant),
                  DimensionError);
}

TEST_CASE("transport gradients flow to the latent and the fields") {
  OperatorConfig cfg = small_config();
  cfg.m = 3;
  Rng rng(9);
  TransportOperator op = make_operator(cfg, rng);
  // give the fields nonzero structure so gradients are not trivially zero
  pin_field(op.bank.fields[0], {0.1, -0.4, 0.2, 0.3, 0.0, -0.2, 0.5, 0.1, -0.3});
  pin_field(op.bank.fields[1], {-0.2, 0.1, 0.4, -0.1, 0.2, 0.0, 0.3, -0.5, 0.2});
  Tensor gi = row2(1.0, 2.0);
  Tensor gj = row2(3.0, 1.0);

  Tensor e0 = Tensor::from_values({1, 3}, {0.5, -1.0, 0.8}, true);
  double rel_e = grad_check(
      [&](const Tensor& e) {
        return sum_sq(transport_latent(e, gi, gj, op.bank, op.variant));
      },
      e0);
  CHECK_LT(rel_e, 1e-4);

  Tensor b0 = op.bank.fields[0].layers.back().b;
  double rel_b = grad_check(
      [&](const Tensor& b) {
        LieFieldBank bank = op.bank;
        bank.fields[0].layers.back().b = b;
        return sum_sq(transport_latent(e0, gi, gj, bank, op.variant));
      },
      b0);
  CHECK_LT(rel_b, 1e-4);
}

TEST_CASE("variant construction rules") {
  Rng rng(10);
  OperatorConfig cfg = small_config();
  OperatorVariant both;
  both.plain = true;
  both.no_lie = true;
  CHECK_THROWS_AS(make_ablation_operator(cfg, both, rng), ArgumentError);

  OperatorVariant plain;
  plain.plain = true;
  TransportOperator op = make_ablation_operator(cfg, plain, rng);
  CHECK(op.variant.plain);
  // plain transport still maps a [1,D] row to a [1,D] row
  std::vector<double> raw(6, 0.25);
  Tensor theta = Tensor::from_values({1, 6}, std::move(raw));
  Tensor moved = transport_params(op, theta, row2(1.0, 1.0), row2(2.0, 2.0));
  CHECK_EQ(moved.rows(), 1);
  CHECK_EQ(moved.cols(), 6);
}

TEST_CASE("chart construction") {
  std::vector<Descriptor> line = {{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  ChartIndex idx = build_charts(line, 1);
  CHECK_EQ(idx.neighbors[0], std::vector<int>{1});
  CHECK_EQ(idx.neighbors[1], std::vector<int>{0});
  CHECK_EQ(idx.neighbors[2], std::vector<int>{1});
  // directed: 2 lists 1 but 1 does not list 2
  CHECK_EQ(std::count(idx.neighbors[1].begin(), idx.neighbors[1].end(), 2), 0);

  CHECK_THROWS_AS(build_charts(line, 5), ArgumentError);
  CHECK_THROWS_AS(build_charts({{0.0, 0.0}}, 1), ArgumentError);

  // brute-force oracle on a larger cloud
  Rng rng(12);
  std::vector<Descriptor> cloud(50);
  for (auto& z : cloud) z = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
  ChartIndex charts = build_charts(cloud, 5);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::pair<double, int>> dist;
    for (int j = 0; j < 50; ++j) {
      if (j == i) continue;
      double dx = cloud[i][0] - cloud[j][0], dy = cloud[i][1] - cloud[j][1];
      dist.push_back({dx * dx + dy * dy, j});
    }
    std::sort(dist.begin(), dist.end());
    REQUIRE_EQ(charts.neighbors[i].size(), 5);
    for (int r = 0; r < 5; ++r) CHECK_EQ(charts.neighbors[i][r], dist[r].second);
    CHECK_EQ(std::count(charts.neighbors[i].begin(), charts.neighbors[i].end(), i), 0);
  }
}

TEST_CASE("checked transport enforces the chart") {
  Rng rng(13);
  TransportOperator op = make_operator(small_config(), rng);
  std::vector<Descriptor> zs = {{0.0, 0.0}, {1.0, 0.0}, {9.0, 9.0}, {1.2, 0.3}};
  op.charts = build_charts(zs, 2);
  std::vector<Tensor> rows;
  for (const auto& z : zs) rows.push_back(descriptor_row(z));
  std::vector<double> raw(6, 0.5);
  Tensor theta = Tensor::from_values({1, 6}, std::move(raw));

  REQUIRE_EQ(op.charts.neighbors[0], std::vector<int>{1, 3});
  Tensor via_check = transport_params_checked(op, theta, 0, 1, rows);
  Tensor direct = transport_params(op, theta, rows[0], rows[1]);
  for (int c = 0; c < 6; ++c) CHECK_EQ(via_check.at(0, c), direct.at(0, c));

  CHECK_THROWS_AS(transport_params_checked(op, theta, 0, 2, rows), ChartError);
  CHECK_THROWS_AS(transport_params_checked(op, theta, 7, 1, rows), ChartError);
}

TEST_CASE("operator checkpoint round trip") {
  Rng rng(14);
  OperatorConfig cfg = small_config();
  cfg.variant.raw_coeffs = true;
  TransportOperator op = make_operator(cfg, rng);
  pin_field(op.bank.fields[0], std::vector<double>(16, 0.125));
  std::vector<Descriptor> zs = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 1.0}};
  op.charts = build_charts(zs, 2);

  std::string dir = "/tmp/liodg_op_roundtrip";
  std::filesystem::remove_all(dir);
  save_operator(op, dir);
  TransportOperator back = load_operator(dir);

  CHECK_EQ(back.enc_dec.D, op.enc_dec.D);
  CHECK_EQ(back.enc_dec.m, op.enc_dec.m);
  CHECK_EQ(back.bank.B, op.bank.B);
  CHECK_EQ(back.k, op.k);
  CHECK(back.variant.raw_coeffs);
  CHECK_FALSE(back.variant.plain);
  REQUIRE_EQ(back.charts.neighbors.size(), op.charts.neighbors.size());
  for (std::size_t i = 0; i < op.charts.neighbors.size(); ++i)
    CHECK_EQ(back.charts.neighbors[i], op.charts.neighbors[i]);

  auto a = op.named_params();
  auto b = back.named_params();
  REQUIRE_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_EQ(a[i].first, b[i].first);
    REQUIRE_EQ(a[i].second.numel(), b[i].second.numel());
    for (std::size_t v = 0; v < a[i].second.numel(); ++v)
      CHECK_EQ(a[i].second.values()[v], b[i].second.values()[v]);
  }
  std::filesystem::remove_all(dir);
}
