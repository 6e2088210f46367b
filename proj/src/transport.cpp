#include "lio/transport.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lio/csv.hpp"
#include "lio/errors.hpp"
#include "lio/linalg.hpp"

namespace fs = std::filesystem;

namespace lio {

namespace {

std::vector<int> mlp_widths(const Mlp& m) {
  std::vector<int> w;
  if (m.layers.empty()) return w;
  w.push_back(m.layers[0].in_dim());
  for (const auto& l : m.layers) w.push_back(l.out_dim());
  return w;
}

std::string widths_str(const std::vector<int>& w) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) ss << ' ';
    ss << w[i];
  }
  return ss.str();
}

std::vector<int> parse_widths(const std::string& s) {
  std::istringstream ss(s);
  std::vector<int> w;
  int x;
  while (ss >> x) w.push_back(x);
  return w;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> TransportOperator::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto add_mlp = [&out](const std::string& prefix, const Mlp& m) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      out.emplace_back(prefix + "." + std::to_string(i) + ".W", m.layers[i].W);
      out.emplace_back(prefix + "." + std::to_string(i) + ".b", m.layers[i].b);
    }
  };
  add_mlp("encoder", enc_dec.encoder);
  add_mlp("decoder", enc_dec.decoder);
  if (variant.plain) {
    add_mlp("plain", plain_net);
  } else {
    for (std::size_t b = 0; b < bank.fields.size(); ++b)
      add_mlp("field." + std::to_string(b), bank.fields[b]);
    if (!variant.raw_coeffs) out.emplace_back("coeff.W", bank.coeff_w);
  }
  if (!variant.no_gate) {
    out.emplace_back("gate.W", gate.W);
    out.emplace_back("gate.w", gate.w);
  }
  return out;
}

std::vector<Tensor> TransportOperator::trainable_params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

TransportOperator make_operator(const OperatorConfig& cfg, Rng& rng) {
  if (cfg.D < 1) throw ArgumentError("make_operator: D must be positive");
  if (cfg.m < 1 || cfg.B < 1 || cfg.d < 1)
    throw ArgumentError("make_operator: m, B, d must be positive");
  if (cfg.variant.plain && cfg.variant.no_lie)
    throw ArgumentError("make_operator: plain and no_lie are mutually exclusive");

  TransportOperator op;
  op.variant = cfg.variant;
  op.k = cfg.k;

  std::vector<int> enc{cfg.D};
  enc.insert(enc.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
  enc.push_back(cfg.m);
  std::vector<int> dec(enc.rbegin(), enc.rend());
  op.enc_dec.encoder = make_mlp(rng, enc);
  op.enc_dec.decoder = make_mlp(rng, dec);
  op.enc_dec.D = cfg.D;
  op.enc_dec.m = cfg.m;

  int B = cfg.variant.raw_coeffs ? cfg.d : cfg.B;
  op.bank.B = B;
  op.bank.m = cfg.m;
  op.bank.d = cfg.d;
  for (int b = 0; b < B; ++b)
    op.bank.fields.push_back(
        make_mlp(rng, {cfg.d, cfg.field_hidden, cfg.m * cfg.m}, /*zero_last=*/true));
  if (cfg.variant.raw_coeffs) {
    op.bank.coeff_w = Tensor();  // coefficients are the raw descriptor difference
  } else {
    // zero bias is structural (c(0)=0); weights random so the field networks
    // receive gradient from the first step
    double limit = std::sqrt(6.0 / (cfg.d + B));
    std::vector<double> w(static_cast<std::size_t>(cfg.d) * B);
    for (double& v : w) v = rng.uniform(-limit, limit);
    op.bank.coeff_w = Tensor::from_values({cfg.d, B}, std::move(w), true);
  }

  op.gate.W = Tensor::zeros({cfg.d, cfg.d}, true);
  std::vector<double> wv(cfg.d, 2.0);
  op.gate.w = Tensor::from_values({1, cfg.d}, std::move(wv), true);

  if (cfg.variant.plain) {
    std::vector<int> pw{2 * cfg.d + cfg.m};
    pw.insert(pw.end(), cfg.plain_hidden.begin(), cfg.plain_hidden.end());
    pw.push_back(cfg.m);
    op.plain_net = make_mlp(rng, pw);
  }
  return op;
}

TransportOperator make_ablation_operator(const OperatorConfig& cfg,
                                         const OperatorVariant& flags, Rng& rng) {
  OperatorConfig c = cfg;
  c.variant = flags;
  return make_operator(c, rng);
}

std::pair<Tensor, Tensor> gate_descriptors(const Tensor& z_i, const Tensor& z_j,
                                           const Gate& gate, bool bypass) {
  if (z_i.shape() != z_j.shape())
    throw ArgumentError("gate_descriptors: descriptor dimension mismatch");
  if (bypass) return {z_i, z_j};
  if (z_i.cols() != gate.W.rows())
    throw ArgumentError("gate_descriptors: descriptor/gate dimension mismatch");
  Tensor mask = mul(sigmoid(matmul(z_i, gate.W)), gate.w);
  return {mul(z_i, mask), mul(z_j, mask)};
}

Tensor transport_latent(const Tensor& e, const Tensor& z_gated_i,
                        const Tensor& z_gated_j, const LieFieldBank& bank,
                        const OperatorVariant& variant) {
  if (e.cols() != bank.m)
    throw DimensionError("transport_latent: latent width " + std::to_string(e.cols()) +
                         ", bank expects " + std::to_string(bank.m));
  Tensor dz = sub(z_gated_j, z_gated_i);
  Tensor c;
  if (variant.raw_coeffs) {
    if (dz.cols() != bank.B)
      throw DimensionError("transport_latent: raw_coeffs needs B = d");
    c = dz;
  } else {
    c = matmul(dz, bank.coeff_w);  // [1, B]
  }

  Tensor x = transpose(e);  // [m, 1]
  if (variant.no_lie) {
    Tensor a;  // sum of scaled basis matrices
    for (int b = 0; b < bank.B; ++b) {
      Tensor v = reshape(bank.fields[b].forward(z_gated_i), {bank.m, bank.m});
      Tensor scaled = smul(slice_cols(c, b, b + 1), v);
      a = b == 0 ? scaled : add(a, scaled);
    }
    x = matmul(a, x);
  } else {
    for (int b = 0; b < bank.B; ++b) {
      Tensor v = reshape(bank.fields[b].forward(z_gated_i), {bank.m, bank.m});
      Tensor g = smul(slice_cols(c, b, b + 1), v);
      x = matmul(matrix_exp(g), x);
    }
  }
  Tensor out = transpose(x);
  if (!all_finite(out))
    throw NumericError("transport_latent: non-finite transported latent");
  return out;
}

Tensor transport_params(const TransportOperator& op, const Tensor& theta,
                        const Tensor& z_i, const Tensor& z_j) {
  if (theta.cols() != op.enc_dec.D)
    throw DimensionError("transport_params: theta width mismatch");
  Tensor e = op.enc_dec.encoder.forward(theta);
  auto [gi, gj] = gate_descriptors(z_i, z_j, op.gate, op.variant.no_gate);
  Tensor moved;
  if (op.variant.plain)
    moved = op.plain_net.forward(concat_cols({gi, gj, e}));
  else
    moved = transport_latent(e, gi, gj, op.bank, op.variant);
  return op.enc_dec.decoder.forward(moved);
}

Tensor transport_params_checked(const TransportOperator& op, const Tensor& theta,
                                int i, int j,
                                const std::vector<Tensor>& descriptors) {
  if (i < 0 || i >= static_cast<int>(op.charts.neighbors.size()))
    throw ChartError("transport_params_checked: source index " + std::to_string(i) +
                     " has no chart");
  const auto& nb = op.charts.neighbors[i];
  if (std::find(nb.begin(), nb.end(), j) == nb.end())
    throw ChartError("transport_params_checked: " + std::to_string(j) +
                     " is not in the chart of " + std::to_string(i));
  return transport_params(op, theta, descriptors[i], descriptors[j]);
}

ChartIndex build_charts(const std::vector<Descriptor>& descriptors, int k) {
  int n = static_cast<int>(descriptors.size());
  if (n < 2) throw ArgumentError("build_charts: need at least 2 descriptors");
  if (k < 1 || k >= n)
    throw ArgumentError("build_charts: k=" + std::to_string(k) +
                        " outside [1," + std::to_string(n - 1) + "]");
  int d = static_cast<int>(descriptors[0].size());
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(descriptors[i].size()) != d)
      throw ArgumentError("build_charts: inconsistent descriptor dimensions");
    std::copy(descriptors[i].begin(), descriptors[i].end(),
              flat.begin() + static_cast<std::ptrdiff_t>(i) * d);
  }
  Tensor points = Tensor::from_values({n, d}, std::move(flat));

  ChartIndex idx;
  idx.k = k;
  idx.neighbors.resize(n);
  for (int i = 0; i < n; ++i) {
    Tensor q = Tensor::from_values({1, d}, std::vector<double>(descriptors[i].begin(),
                                                               descriptors[i].end()));
    auto nb = knn(points, q, std::min(k + 1, n));
    auto& out = idx.neighbors[i];
    for (int j : nb) {
      if (j == i) continue;
      out.push_back(j);
      if (static_cast<int>(out.size()) == k) break;
    }
    if (static_cast<int>(out.size()) != k)
      throw ChartError("build_charts: could not collect k neighbors for index " +
                       std::to_string(i));
  }
  return idx;
}

Tensor descriptor_row(const Descriptor& z) {
  return Tensor::from_values({1, static_cast<int>(z.size())},
                             std::vector<double>(z.begin(), z.end()));
}

Tensor encode(const TransportOperator& op, const Tensor& thetas) {
  return op.enc_dec.encoder.forward(thetas);
}

Tensor decode(const TransportOperator& op, const Tensor& latents) {
  return op.enc_dec.decoder.forward(latents);
}

// ---- checkpoint ----------------------------------------------------------

void save_operator(const TransportOperator& op, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  auto named = op.named_params();

  CsvWriter w(dir + "/operator.csv");
  w.header({"key", "value"});
  w.row({"format", "liodg-operator v1"});
  w.row({"hyper_B", std::to_string(op.bank.B)});
  w.row({"hyper_m", std::to_string(op.bank.m)});
  w.row({"hyper_d", std::to_string(op.bank.d)});
  w.row({"hyper_k", std::to_string(op.k)});
  w.row({"hyper_D", std::to_string(op.enc_dec.D)});
  w.row({"variant_plain", op.variant.plain ? "1" : "0"});
  w.row({"variant_no_lie", op.variant.no_lie ? "1" : "0"});
  w.row({"variant_no_gate", op.variant.no_gate ? "1" : "0"});
  w.row({"variant_no_chart", op.variant.no_chart ? "1" : "0"});
  w.row({"variant_raw_coeffs", op.variant.raw_coeffs ? "1" : "0"});
  w.row({"arch_encoder", widths_str(mlp_widths(op.enc_dec.encoder))});
  w.row({"arch_decoder", widths_str(mlp_widths(op.enc_dec.decoder))});
  if (!op.bank.fields.empty())
    w.row({"arch_field", widths_str(mlp_widths(op.bank.fields[0]))});
  if (op.variant.plain) w.row({"arch_plain", widths_str(mlp_widths(op.plain_net))});

  std::ostringstream order;
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (i) order << ' ';
    order << named[i].first;
  }
  w.row({"order", order.str()});
  for (const auto& [name, t] : named) w.row({"shape " + name, widths_str(t.shape())});

  w.row({"charts_k", std::to_string(op.charts.k)});
  w.row({"charts_n", std::to_string(op.charts.neighbors.size())});
  for (std::size_t i = 0; i < op.charts.neighbors.size(); ++i) {
    std::ostringstream nb;
    for (std::size_t j = 0; j < op.charts.neighbors[i].size(); ++j) {
      if (j) nb << ' ';
      nb << op.charts.neighbors[i][j];
    }
    w.row({"chart " + std::to_string(i), nb.str()});
  }

  std::ofstream bin(dir + "/operator.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open for writing: " + dir + "/operator.bin");
  for (const auto& [name, t] : named) {
    const auto& v = t.values();
    bin.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!bin) throw IoError("write failed: " + dir + "/operator.bin");
}

TransportOperator load_operator(const std::string& dir) {
  auto rows = read_csv(dir + "/operator.csv");
  if (rows.size() < 2 || rows[0] != std::vector<std::string>{"key", "value"})
    throw IoError("bad operator manifest: " + dir);
  std::vector<std::pair<std::string, std::string>> kv;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw IoError("bad manifest row in " + dir);
    kv.emplace_back(rows[i][0], rows[i][1]);
  }
  auto get = [&kv, &dir](const std::string& key) -> std::string {
    for (auto& [k, v] : kv)
      if (k == key) return v;
    throw IoError("missing manifest key '" + key + "' in " + dir);
  };
  if (get("format") != "liodg-operator v1")
    throw IoError("unsupported operator format in " + dir);

  TransportOperator op;
  op.bank.B = std::stoi(get("hyper_B"));
  op.bank.m = std::stoi(get("hyper_m"));
  op.bank.d = std::stoi(get("hyper_d"));
  op.k = std::stoi(get("hyper_k"));
  op.enc_dec.D = std::stoi(get("hyper_D"));
  op.enc_dec.m = op.bank.m;
  op.variant.plain = get("variant_plain") == "1";
  op.variant.no_lie = get("variant_no_lie") == "1";
  op.variant.no_gate = get("variant_no_gate") == "1";
  op.variant.no_chart = get("variant_no_chart") == "1";
  op.variant.raw_coeffs = get("variant_raw_coeffs") == "1";

  auto build_empty_mlp = [](const std::vector<int>& widths) {
    Mlp m;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
      m.layers.push_back(make_linear_zero(widths[i], widths[i + 1], true));
    return m;
  };
  op.enc_dec.encoder = build_empty_mlp(parse_widths(get("arch_encoder")));
  op.enc_dec.decoder = build_empty_mlp(parse_widths(get("arch_decoder")));
  if (!op.variant.plain) {
    auto fw = parse_widths(get("arch_field"));
    for (int b = 0; b < op.bank.B; ++b) op.bank.fields.push_back(build_empty_mlp(fw));
    if (!op.variant.raw_coeffs)
      op.bank.coeff_w = Tensor::zeros({op.bank.d, op.bank.B}, true);
  } else {
    op.plain_net = build_empty_mlp(parse_widths(get("arch_plain")));
  }
  op.gate.W = Tensor::zeros({op.bank.d, op.bank.d}, true);
  op.gate.w = Tensor::zeros({1, op.bank.d}, true);

  op.charts.k = std::stoi(get("charts_k"));
  int cn = std::stoi(get("charts_n"));
  op.charts.neighbors.resize(cn);
  for (int i = 0; i < cn; ++i) {
    auto widths = parse_widths(get("chart " + std::to_string(i)));
    op.charts.neighbors[i] = widths;
  }

  auto named = op.named_params();
  {
    std::ostringstream order;
    for (std::size_t i = 0; i < named.size(); ++i) {
      if (i) order << ' ';
      order << named[i].first;
    }
    if (order.str() != get("order"))
      throw IoError("operator checkpoint ordering mismatch in " + dir);
  }
  for (auto& [name, t] : named) {
    auto shape = parse_widths(get("shape " + name));
    if (shape != t.shape())
      throw IoError("shape mismatch for tensor " + name + " in " + dir);
  }

  std::ifstream bin(dir + "/operator.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open: " + dir + "/operator.bin");
  for (auto& [name, t] : named) {
    auto node = t.node();
    bin.read(reinterpret_cast<char*>(node->value.data()),
             static_cast<std::streamsize>(node->value.size() * sizeof(double)));
    if (!bin) throw IoError("truncated operator.bin in " + dir);
  }
  char extra;
  if (bin.read(&extra, 1)) throw IoError("trailing bytes in operator.bin in " + dir);
  return op;
}

}  // namespace lio
