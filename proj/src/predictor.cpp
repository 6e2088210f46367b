#include "lio/predictor.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "lio/csv.hpp"
#include "lio/errors.hpp"

namespace fs = std::filesystem;

namespace lio {

int PredictorArch::param_count() const {
  if (widths.size() < 2) throw ArgumentError("PredictorArch: need at least 2 widths");
  int d = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    d += widths[i] * widths[i + 1] + widths[i + 1];
  return d;
}

const ParamVector& ParamStore::at(int domain_id) const {
  auto it = by_domain.find(domain_id);
  if (it == by_domain.end())
    throw StateError("ParamStore: no parameters for domain " +
                     std::to_string(domain_id));
  return it->second;
}

std::vector<int> ParamStore::ids() const {
  std::vector<int> out;
  out.reserve(by_domain.size());
  for (const auto& [id, _] : by_domain) out.push_back(id);
  return out;
}

Tensor predict(const PredictorArch& arch, const Tensor& theta, const Tensor& inputs) {
  int d = arch.param_count();
  if (theta.shape() != std::vector<int>{1, d})
    throw DimensionError("predict: theta shape " + shape_str(theta.shape()) +
                         ", expected [1," + std::to_string(d) + "]");
  if (inputs.cols() != arch.widths.front())
    throw DimensionError("predict: input width " + std::to_string(inputs.cols()) +
                         ", arch expects " + std::to_string(arch.widths.front()));
  Tensor h = inputs;
  int off = 0;
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
    int in = arch.widths[l], out = arch.widths[l + 1];
    Tensor w = reshape(slice_cols(theta, off, off + in * out), {in, out});
    off += in * out;
    Tensor b = slice_cols(theta, off, off + out);
    off += out;
    h = add_rowvec(matmul(h, w), b);
    if (l + 2 < arch.widths.size()) h = relu(h);
  }
  return h;
}

Tensor loss_pred(const Tensor& logits, const std::vector<int>& labels) {
  return softmax_cross_entropy(logits, labels);
}

double error_rate(const Tensor& logits, const std::vector<int>& labels) {
  int n = logits.rows(), c = logits.cols();
  if (static_cast<int>(labels.size()) != n)
    throw DimensionError("error_rate: label count mismatch");
  const auto& v = logits.values();
  int wrong = 0;
  for (int i = 0; i < n; ++i) {
    const double* row = v.data() + static_cast<std::size_t>(i) * c;
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (row[j] > row[best]) best = j;
    if (best != labels[i]) ++wrong;
  }
  return 100.0 * wrong / n;
}

Tensor flatten_params(const PredictorArch& arch, const std::vector<Linear>& layers,
                      bool trainable) {
  if (layers.size() + 1 != arch.widths.size())
    throw DimensionError("flatten_params: layer count mismatch");
  std::vector<double> flat;
  flat.reserve(arch.param_count());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].in_dim() != arch.widths[l] || layers[l].out_dim() != arch.widths[l + 1])
      throw DimensionError("flatten_params: layer " + std::to_string(l) +
                           " widths mismatch");
    const auto& w = layers[l].W.values();
    flat.insert(flat.end(), w.begin(), w.end());
    const auto& b = layers[l].b.values();
    flat.insert(flat.end(), b.begin(), b.end());
  }
  return Tensor::from_values({1, arch.param_count()}, std::move(flat), trainable);
}

std::vector<Linear> unflatten_params(const PredictorArch& arch, const Tensor& theta) {
  int d = arch.param_count();
  if (static_cast<int>(theta.numel()) != d)
    throw DimensionError("unflatten_params: theta has " + std::to_string(theta.numel()) +
                         " values, arch needs " + std::to_string(d));
  const auto& v = theta.values();
  std::vector<Linear> layers;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
    int in = arch.widths[l], out = arch.widths[l + 1];
    Linear lin;
    lin.W = Tensor::from_values(
        {in, out}, std::vector<double>(v.begin() + off, v.begin() + off + in * out));
    off += static_cast<std::size_t>(in) * out;
    lin.b = Tensor::from_values(
        {1, out}, std::vector<double>(v.begin() + off, v.begin() + off + out));
    off += out;
    layers.push_back(std::move(lin));
  }
  return layers;
}

Tensor init_theta(const PredictorArch& arch, Rng& rng) {
  std::vector<Linear> layers;
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l)
    layers.push_back(make_linear(rng, arch.widths[l], arch.widths[l + 1], false));
  return flatten_params(arch, layers, false);
}

void save_param_store(const ParamStore& store, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
  for (const auto& [id, pv] : store.by_domain) {
    CsvWriter w(dir + "/theta_" + std::to_string(id) + ".csv");
    w.header({"key", "value"});
    w.row({"format", "liodg-theta v1"});
    std::ostringstream arch;
    for (std::size_t i = 0; i < store.arch.widths.size(); ++i) {
      if (i) arch << ' ';
      arch << store.arch.widths[i];
    }
    w.row({"arch", arch.str()});
    w.row({"domain", std::to_string(id)});
    const auto& v = pv.theta.values();
    for (std::size_t i = 0; i < v.size(); ++i)
      w.row({"theta" + std::to_string(i), fmt_g17(v[i])});
  }
}

ParamStore load_param_store(const std::string& dir) {
  ParamStore store;
  bool arch_set = false;
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw IoError("no such checkpoint directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    if (name.rfind("theta_", 0) == 0 && name.size() > 10 &&
        name.substr(name.size() - 4) == ".csv")
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no theta files in " + dir);

  for (const auto& f : files) {
    auto rows = read_csv(f);
    if (rows.size() < 4 || rows[0] != std::vector<std::string>{"key", "value"} ||
        rows[1][0] != "format" || rows[1][1] != "liodg-theta v1")
      throw IoError("bad theta checkpoint: " + f);
    PredictorArch arch;
    arch.widths.clear();
    {
      std::istringstream ss(rows[2][1]);
      int w;
      while (ss >> w) arch.widths.push_back(w);
    }
    if (rows[2][0] != "arch" || arch.widths.size() < 2)
      throw IoError("bad arch header in " + f);
    if (!arch_set) {
      store.arch = arch;
      arch_set = true;
    } else if (!(arch == store.arch)) {
      throw IoError("inconsistent arch across theta files in " + dir);
    }
    if (rows[3][0] != "domain") throw IoError("missing domain row in " + f);
    int id = std::stoi(rows[3][1]);
    int d = arch.param_count();
    if (static_cast<int>(rows.size()) != 4 + d)
      throw IoError("wrong value count in " + f);
    std::vector<double> v(d);
    for (int i = 0; i < d; ++i) v[i] = std::stod(rows[4 + i][1]);
    ParamVector pv;
    pv.domain_id = id;
    pv.theta = Tensor::from_values({1, d}, std::move(v), true);
    store.by_domain.emplace(id, std::move(pv));
  }
  return store;
}

}  // namespace lio
