#include "lio/config.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lio/csv.hpp"
#include "lio/errors.hpp"

namespace lio {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    if (line[i] == '"') {
      std::size_t j = line.find('"', i + 1);
      if (j == std::string::npos)
        throw ArgumentError("config: unterminated quote: " + line);
      out.push_back(line.substr(i + 1, j - i - 1));
      i = j + 1;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
           line[j] != '#')
      ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& tok) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("config: bad number for " + key + ": " + tok);
  }
}

int parse_int(const std::string& key, const std::string& tok) {
  try {
    std::size_t pos = 0;
    long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ArgumentError("config: bad integer for " + key + ": " + tok);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& tok) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("config: bad unsigned integer for " + key + ": " + tok);
  }
}

bool parse_bool(const std::string& key, const std::string& tok) {
  if (tok == "true" || tok == "1") return true;
  if (tok == "false" || tok == "0") return false;
  throw ArgumentError("config: bad boolean for " + key + ": " + tok);
}

const std::vector<std::string>& one(const std::string& key,
                                    const std::vector<std::string>& vals) {
  if (vals.size() != 1)
    throw ArgumentError("config: " + key + " expects one value");
  return vals;
}

std::vector<int> int_list(const std::string& key,
                          const std::vector<std::string>& vals) {
  if (vals.empty()) throw ArgumentError("config: " + key + " expects values");
  std::vector<int> out;
  for (const auto& t : vals) out.push_back(parse_int(key, t));
  return out;
}

std::vector<std::uint64_t> u64_list(const std::string& key,
                                    const std::vector<std::string>& vals) {
  if (vals.empty()) throw ArgumentError("config: " + key + " expects values");
  std::vector<std::uint64_t> out;
  for (const auto& t : vals) out.push_back(parse_u64(key, t));
  return out;
}

void apply_key(ExperimentConfig& c, const std::string& key,
               const std::vector<std::string>& v) {
  auto d1 = [&] { return parse_double(key, one(key, v)[0]); };
  auto i1 = [&] { return parse_int(key, one(key, v)[0]); };
  auto u1 = [&] { return parse_u64(key, one(key, v)[0]); };
  auto b1 = [&] { return parse_bool(key, one(key, v)[0]); };
  auto s1 = [&] { return one(key, v)[0]; };

  if (key == "output_dir") c.output_dir = s1();

  else if (key == "dataset.n_train") c.dataset.n_train = i1();
  else if (key == "dataset.n_test") c.dataset.n_test = i1();
  else if (key == "dataset.mesh_per_axis") c.dataset.mesh_per_axis = i1();
  else if (key == "dataset.bounds_lo") {
    if (v.size() != 2) throw ArgumentError("config: " + key + " expects two values");
    c.dataset.bounds.lo[0] = parse_double(key, v[0]);
    c.dataset.bounds.lo[1] = parse_double(key, v[1]);
  } else if (key == "dataset.bounds_hi") {
    if (v.size() != 2) throw ArgumentError("config: " + key + " expects two values");
    c.dataset.bounds.hi[0] = parse_double(key, v[0]);
    c.dataset.bounds.hi[1] = parse_double(key, v[1]);
  } else if (key == "dataset.n_per_class") c.dataset.moons.n_per_class = i1();
  else if (key == "dataset.noise_std") c.dataset.moons.noise_std = d1();
  else if (key == "dataset.scale_law") {
    std::string s = s1();
    if (s == "compound") c.dataset.moons.scale_law = ScaleLaw::compound;
    else if (s == "linear") c.dataset.moons.scale_law = ScaleLaw::linear;
    else throw ArgumentError("config: dataset.scale_law must be compound or linear");
  } else if (key == "dataset.seed") c.dataset.seed = u1();
  else if (key == "dataset.imperfection.kind")
    c.dataset.imperfection.kind = imperfection_kind_from_string(s1());
  else if (key == "dataset.imperfection.noise_dims")
    c.dataset.imperfection.noise_dims = i1();
  else if (key == "dataset.imperfection.projection_dim")
    c.dataset.imperfection.projection_dim = i1();
  else if (key == "dataset.imperfection.drop_count")
    c.dataset.imperfection.drop_count = i1();
  else if (key == "dataset.imperfection.seed") c.dataset.imperfection.seed = u1();

  else if (key == "arch.widths") {
    c.train.arch.widths = int_list(key, v);
    if (c.train.arch.widths.size() < 2)
      throw ArgumentError("config: arch.widths needs at least two entries");
  } else if (key == "arch.m") c.train.m = i1();
  else if (key == "arch.B") c.train.B = i1();
  else if (key == "arch.encoder_hidden") c.train.encoder_hidden = int_list(key, v);
  else if (key == "arch.field_hidden") c.train.field_hidden = i1();
  else if (key == "arch.plain_hidden") c.train.plain_hidden = int_list(key, v);

  else if (key == "train.epochs") c.train.epochs = i1();
  else if (key == "train.minibatch_domains") c.train.minibatch_domains = i1();
  else if (key == "train.learning_rate") c.train.learning_rate = d1();
  else if (key == "train.k") c.train.k = i1();
  else if (key == "train.seed") c.train.seed = u1();
  else if (key == "train.weights.pred_self") c.train.weights.pred_self = d1();
  else if (key == "train.weights.recon") c.train.weights.recon = d1();
  else if (key == "train.weights.pred_cross") c.train.weights.pred_cross = d1();
  else if (key == "train.weights.consist") c.train.weights.consist = d1();
  else if (key == "train.weights.embed") c.train.weights.embed = d1();
  else if (key == "train.plain") c.train.variant.plain = b1();
  else if (key == "train.no_lie") c.train.variant.no_lie = b1();
  else if (key == "train.no_gate") c.train.variant.no_gate = b1();
  else if (key == "train.no_chart") c.train.variant.no_chart = b1();
  else if (key == "train.raw_coeffs") c.train.variant.raw_coeffs = b1();

  else if (key == "eval.triplet_samples") c.eval.triplet_samples = i1();
  else if (key == "eval.identity_min") c.eval.identity_min = d1();
  else if (key == "eval.associativity_min") c.eval.associativity_min = d1();
  else if (key == "eval.invertibility_min") c.eval.invertibility_min = d1();
  else if (key == "eval.main_error_max") c.eval.main_error_max = d1();
  else if (key == "eval.sweep_seeds") c.eval.sweep_seeds = u64_list(key, v);
  else if (key == "eval.sweep_epochs") c.eval.sweep_epochs = i1();
  else if (key == "eval.noisy_levels") c.eval.noisy_levels = int_list(key, v);
  else if (key == "eval.noisy_gated_max") c.eval.noisy_gated_max = d1();
  else if (key == "eval.redundant_levels") c.eval.redundant_levels = int_list(key, v);
  else if (key == "eval.redundant_max") c.eval.redundant_max = d1();
  else if (key == "eval.incomplete_levels")
    c.eval.incomplete_levels = int_list(key, v);
  else if (key == "eval.incomplete_compare_level")
    c.eval.incomplete_compare_level = i1();
  else if (key == "eval.incomplete_n_train") c.eval.incomplete_n_train = i1();
  else if (key == "eval.domain_counts") c.eval.domain_counts = int_list(key, v);
  else if (key == "eval.count20_max") c.eval.count20_max = d1();
  else if (key == "eval.count50_max") c.eval.count50_max = d1();
  else if (key == "eval.spearman_max") c.eval.spearman_max = d1();
  else if (key == "eval.manifold_mesh") c.eval.manifold_mesh = i1();

  else throw ArgumentError("config: unknown key " + key);
}

std::string fmt_num(double v) { return fmt_g17(v); }

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s << ' ';
    s << v[i];
  }
  return s.str();
}

void flatten_json(const nlohmann::json& j, const std::string& prefix,
                  ConfigMap& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      flatten_json(it.value(), key, out);
    }
    return;
  }
  auto scalar = [](const nlohmann::json& s) -> std::string {
    if (s.is_string()) return s.get<std::string>();
    if (s.is_boolean()) return s.get<bool>() ? "true" : "false";
    if (s.is_number_unsigned())
      return std::to_string(s.get<std::uint64_t>());
    if (s.is_number_integer()) return std::to_string(s.get<std::int64_t>());
    if (s.is_number_float()) return fmt_g17(s.get<double>());
    throw ArgumentError("config: unsupported JSON value");
  };
  if (j.is_array()) {
    std::vector<std::string> toks;
    for (const auto& e : j) {
      if (e.is_object() || e.is_array())
        throw ArgumentError("config: JSON arrays must hold scalars: " + prefix);
      toks.push_back(scalar(e));
    }
    out[prefix] = toks;
    return;
  }
  out[prefix] = {scalar(j)};
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::vector<std::string> stack;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
    if (toks.size() == 1 && toks[0] == "}") {
      if (stack.empty()) throw ArgumentError("config: unmatched }" + where());
      stack.pop_back();
      continue;
    }
    if (toks.size() == 2 && toks[1] == "{") {
      stack.push_back(toks[0]);
      continue;
    }
    if (toks.size() >= 3 && toks[1] == "=") {
      std::string key;
      for (const auto& b : stack) key += b + ".";
      key += toks[0];
      if (out.count(key)) throw ArgumentError("config: duplicate key " + key);
      out[key] = std::vector<std::string>(toks.begin() + 2, toks.end());
      continue;
    }
    throw ArgumentError("config: cannot parse line" + where() + ": " + line);
  }
  if (!stack.empty())
    throw ArgumentError("config: unclosed block " + stack.back());
  return out;
}

ConfigMap parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config: JSON root must be an object");
  ConfigMap out;
  flatten_json(j, "", out);
  return out;
}

ExperimentConfig config_from_map(const ConfigMap& map) {
  ExperimentConfig cfg;
  for (const auto& [key, vals] : map) apply_key(cfg, key, vals);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text = read_file(path);
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i < text.size() && text[i] == '{')
    return config_from_map(parse_config_json(text));
  return config_from_map(parse_config_text(text));
}

std::string resolved_config_text(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "output_dir = \"" << c.output_dir << "\"\n";
  s << "dataset {\n";
  s << "  n_train = " << c.dataset.n_train << "\n";
  s << "  n_test = " << c.dataset.n_test << "\n";
  s << "  mesh_per_axis = " << c.dataset.mesh_per_axis << "\n";
  s << "  bounds_lo = " << fmt_num(c.dataset.bounds.lo[0]) << " "
    << fmt_num(c.dataset.bounds.lo[1]) << "\n";
  s << "  bounds_hi = " << fmt_num(c.dataset.bounds.hi[0]) << " "
    << fmt_num(c.dataset.bounds.hi[1]) << "\n";
  s << "  n_per_class = " << c.dataset.moons.n_per_class << "\n";
  s << "  noise_std = " << fmt_num(c.dataset.moons.noise_std) << "\n";
  s << "  scale_law = "
    << (c.dataset.moons.scale_law == ScaleLaw::compound ? "compound" : "linear")
    << "\n";
  s << "  seed = " << c.dataset.seed << "\n";
  s << "  imperfection {\n";
  s << "    kind = " << to_string(c.dataset.imperfection.kind) << "\n";
  s << "    noise_dims = " << c.dataset.imperfection.noise_dims << "\n";
  s << "    projection_dim = " << c.dataset.imperfection.projection_dim << "\n";
  s << "    drop_count = " << c.dataset.imperfection.drop_count << "\n";
  s << "    seed = " << c.dataset.imperfection.seed << "\n";
  s << "  }\n";
  s << "}\n";
  s << "arch {\n";
  s << "  widths = " << join(c.train.arch.widths) << "\n";
  s << "  m = " << c.train.m << "\n";
  s << "  B = " << c.train.B << "\n";
  s << "  encoder_hidden = " << join(c.train.encoder_hidden) << "\n";
  s << "  field_hidden = " << c.train.field_hidden << "\n";
  s << "  plain_hidden = " << join(c.train.plain_hidden) << "\n";
  s << "}\n";
  s << "train {\n";
  s << "  epochs = " << c.train.epochs << "\n";
  s << "  minibatch_domains = " << c.train.minibatch_domains << "\n";
  s << "  learning_rate = " << fmt_num(c.train.learning_rate) << "\n";
  s << "  k = " << c.train.k << "\n";
  s << "  seed = " << c.train.seed << "\n";
  s << "  weights {\n";
  s << "    pred_self = " << fmt_num(c.train.weights.pred_self) << "\n";
  s << "    recon = " << fmt_num(c.train.weights.recon) << "\n";
  s << "    pred_cross = " << fmt_num(c.train.weights.pred_cross) << "\n";
  s << "    consist = " << fmt_num(c.train.weights.consist) << "\n";
  s << "    embed = " << fmt_num(c.train.weights.embed) << "\n";
  s << "  }\n";
  s << "  plain = " << (c.train.variant.plain ? "true" : "false") << "\n";
  s << "  no_lie = " << (c.train.variant.no_lie ? "true" : "false") << "\n";
  s << "  no_gate = " << (c.train.variant.no_gate ? "true" : "false") << "\n";
  s << "  no_chart = " << (c.train.variant.no_chart ? "true" : "false") << "\n";
  s << "  raw_coeffs = " << (c.train.variant.raw_coeffs ? "true" : "false") << "\n";
  s << "}\n";
  s << "eval {\n";
  s << "  triplet_samples = " << c.eval.triplet_samples << "\n";
  s << "  identity_min = " << fmt_num(c.eval.identity_min) << "\n";
  s << "  associativity_min = " << fmt_num(c.eval.associativity_min) << "\n";
  s << "  invertibility_min = " << fmt_num(c.eval.invertibility_min) << "\n";
  s << "  main_error_max = " << fmt_num(c.eval.main_error_max) << "\n";
  s << "  sweep_seeds = " << join(c.eval.sweep_seeds) << "\n";
  s << "  sweep_epochs = " << c.eval.sweep_epochs << "\n";
  s << "  noisy_levels = " << join(c.eval.noisy_levels) << "\n";
  s << "  noisy_gated_max = " << fmt_num(c.eval.noisy_gated_max) << "\n";
  s << "  redundant_levels = " << join(c.eval.redundant_levels) << "\n";
  s << "  redundant_max = " << fmt_num(c.eval.redundant_max) << "\n";
  s << "  incomplete_levels = " << join(c.eval.incomplete_levels) << "\n";
  s << "  incomplete_compare_level = " << c.eval.incomplete_compare_level << "\n";
  s << "  incomplete_n_train = " << c.eval.incomplete_n_train << "\n";
  s << "  domain_counts = " << join(c.eval.domain_counts) << "\n";
  s << "  count20_max = " << fmt_num(c.eval.count20_max) << "\n";
  s << "  count50_max = " << fmt_num(c.eval.count50_max) << "\n";
  s << "  spearman_max = " << fmt_num(c.eval.spearman_max) << "\n";
  s << "  manifold_mesh = " << c.eval.manifold_mesh << "\n";
  s << "}\n";
  return s.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.output_dir = "out";  // hash the experiment, not where it lands
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved_config_text(c))));
  return buf;
}

}  // namespace lio
