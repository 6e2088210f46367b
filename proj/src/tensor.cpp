#include "lio/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <unordered_set>

#include "lio/errors.hpp"

#ifdef LIO_HAVE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace lio {

namespace {

thread_local bool g_grad_enabled = true;
bool g_gemm_portable = false;

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr make_node(std::vector<int> shape) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value.assign(n->numel(), 0.0);
  return n;
}

bool same_shape(const NodePtr& a, const NodePtr& b) { return a->shape == b->shape; }

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw StateError(std::string(op) + ": undefined tensor");
}

void require_rank2(const NodePtr& n, const char* op) {
  if (n->shape.size() != 2)
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got shape " +
                         shape_str(n->shape));
}

// Links the result node to its inputs when gradients are on.  `fn` runs during
// the backward sweep with out->grad already populated.
void attach(const NodePtr& out, std::vector<NodePtr> parents, std::function<void()> fn) {
  if (!g_grad_enabled) return;
  bool any = false;
  for (const auto& p : parents)
    if (p->requires_grad) any = true;
  if (!any) return;
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backprop = std::move(fn);
}

void gemm_portable(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                   const double* a, int lda, const double* b, int ldb, double beta,
                   double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        double bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      double prev = (beta == 0.0) ? 0.0 : beta * c[i * ldc + j];
      c[i * ldc + j] = prev + alpha * acc;
    }
  }
}

}  // namespace

void set_gemm_portable(bool portable) { g_gemm_portable = portable; }

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc) {
#ifdef LIO_HAVE_CBLAS
  if (!g_gemm_portable) {
    // Single BLAS thread keeps results deterministic and avoids oversubscribing
    // the training loop, which is already the only busy core.
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb,
                beta, c, ldc);
    return;
  }
#endif
  gemm_portable(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// ---- Tensor basics -----------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  for (int d : shape)
    if (d < 0) throw DimensionError("zeros: negative dimension in " + shape_str(shape));
  auto n = make_node(std::move(shape));
  n->requires_grad = requires_grad && g_grad_enabled;
  return Tensor(n);
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  auto n = make_node(std::move(shape));
  if (values.size() != n->value.size())
    throw DimensionError("from_values: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(n->shape));
  n->value = std::move(values);
  n->requires_grad = requires_grad && g_grad_enabled;
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from_values({1, 1}, {v}); }

Tensor Tensor::eye(int n) {
  Tensor t = zeros({n, n});
  for (int i = 0; i < n; ++i) t.node()->value[i * n + i] = 1.0;
  return t;
}

const std::vector<int>& Tensor::shape() const {
  if (!node_) throw StateError("shape: undefined tensor");
  return node_->shape;
}

int Tensor::rows() const {
  const auto& s = shape();
  if (s.size() != 2) throw DimensionError("rows: rank-2 required, got " + shape_str(s));
  return s[0];
}

int Tensor::cols() const {
  const auto& s = shape();
  if (s.size() != 2) throw DimensionError("cols: rank-2 required, got " + shape_str(s));
  return s[1];
}

std::size_t Tensor::numel() const {
  if (!node_) throw StateError("numel: undefined tensor");
  return node_->numel();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::values() const {
  if (!node_) throw StateError("values: undefined tensor");
  return node_->value;
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_) throw StateError("mutable_values: undefined tensor");
  if (node_->backprop)
    throw StateError("mutable_values: refusing to mutate an interior graph node");
  return node_->value;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_) throw StateError("grad: undefined tensor");
  const_cast<detail::Node*>(node_.get())->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) throw StateError("zero_grad: undefined tensor");
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1)
    throw DimensionError("item: tensor has " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

double Tensor::at(int r, int c) const {
  int nr = rows(), nc = cols();
  if (r < 0 || r >= nr || c < 0 || c >= nc)
    throw DimensionError("at: index out of range");
  return node_->value[static_cast<std::size_t>(r) * nc + c];
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool all_finite(const Tensor& a) {
  for (double v : a.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---- operations --------------------------------------------------------

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  require_defined(ta, "matmul");
  require_defined(tb, "matmul");
  auto a = ta.node(), b = tb.node();
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  int m = a->shape[0], k = a->shape[1], k2 = b->shape[0], n = b->shape[1];
  if (k != k2)
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a->shape) +
                         " x " + shape_str(b->shape));
  auto out = make_node({m, n});
  gemm(false, false, m, n, k, 1.0, a->value.data(), k, b->value.data(), n, 0.0,
       out->value.data(), n);
  detail::Node* self = out.get();
  attach(out, {a, b}, [self, a, b, m, n, k] {
    if (a->requires_grad) {
      a->ensure_grad();
      // dA += dC * B^T
      gemm(false, true, m, k, n, 1.0, self->grad.data(), n, b->value.data(), n, 1.0,
           a->grad.data(), k);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      // dB += A^T * dC
      gemm(true, false, k, n, m, 1.0, a->value.data(), k, self->grad.data(), n, 1.0,
           b->grad.data(), n);
    }
  });
  return Tensor(out);
}

namespace {

template <typename Fwd>
Tensor binary_same_shape(const Tensor& ta, const Tensor& tb, const char* name, Fwd fwd,
                         double da_coeff, double db_coeff) {
  require_defined(ta, name);
  require_defined(tb, name);
  auto a = ta.node(), b = tb.node();
  if (!same_shape(a, b))
    throw DimensionError(std::string(name) + ": shape mismatch " + shape_str(a->shape) +
                         " vs " + shape_str(b->shape));
  auto out = make_node(a->shape);
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) out->value[i] = fwd(a->value[i], b->value[i]);
  detail::Node* self = out.get();
  attach(out, {a, b}, [self, a, b, n, da_coeff, db_coeff] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) a->grad[i] += da_coeff * self->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) b->grad[i] += db_coeff * self->grad[i];
    }
  });
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(a, b, "add", [](double x, double y) { return x + y; }, 1.0, 1.0);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(a, b, "sub", [](double x, double y) { return x - y; }, 1.0, -1.0);
}

Tensor mul(const Tensor& ta, const Tensor& tb) {
  require_defined(ta, "mul");
  require_defined(tb, "mul");
  auto a = ta.node(), b = tb.node();
  if (!same_shape(a, b))
    throw DimensionError("mul: shape mismatch " + shape_str(a->shape) + " vs " +
                         shape_str(b->shape));
  auto out = make_node(a->shape);
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) out->value[i] = a->value[i] * b->value[i];
  detail::Node* self = out.get();
  attach(out, {a, b}, [self, a, b, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) a->grad[i] += self->grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) b->grad[i] += self->grad[i] * a->value[i];
    }
  });
  return Tensor(out);
}

Tensor add_rowvec(const Tensor& tm, const Tensor& tv) {
  require_defined(tm, "add_rowvec");
  require_defined(tv, "add_rowvec");
  auto m = tm.node(), v = tv.node();
  require_rank2(m, "add_rowvec");
  require_rank2(v, "add_rowvec");
  int r = m->shape[0], c = m->shape[1];
  if (v->shape[0] != 1 || v->shape[1] != c)
    throw DimensionError("add_rowvec: vector shape " + shape_str(v->shape) +
                         " does not broadcast over " + shape_str(m->shape));
  auto out = make_node(m->shape);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<std::size_t>(i) * c + j] =
          m->value[static_cast<std::size_t>(i) * c + j] + v->value[j];
  detail::Node* self = out.get();
  attach(out, {m, v}, [self, m, v, r, c] {
    if (m->requires_grad) {
      m->ensure_grad();
      std::size_t n = m->grad.size();
      for (std::size_t i = 0; i < n; ++i) m->grad[i] += self->grad[i];
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          v->grad[j] += self->grad[static_cast<std::size_t>(i) * c + j];
    }
  });
  return Tensor(out);
}

Tensor scale(const Tensor& ta, double k) {
  require_defined(ta, "scale");
  auto a = ta.node();
  auto out = make_node(a->shape);
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) out->value[i] = k * a->value[i];
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, n, k] {
    a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) a->grad[i] += k * self->grad[i];
  });
  return Tensor(out);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor smul(const Tensor& ts, const Tensor& ta) {
  require_defined(ts, "smul");
  require_defined(ta, "smul");
  auto s = ts.node(), a = ta.node();
  if (s->numel() != 1)
    throw DimensionError("smul: scalar operand has shape " + shape_str(s->shape));
  auto out = make_node(a->shape);
  double sv = s->value[0];
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) out->value[i] = sv * a->value[i];
  detail::Node* self = out.get();
  attach(out, {s, a}, [self, s, a, n] {
    if (s->requires_grad) {
      s->ensure_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += self->grad[i] * a->value[i];
      s->grad[0] += acc;
    }
    if (a->requires_grad) {
      a->ensure_grad();
      double sv2 = s->value[0];
      for (std::size_t i = 0; i < n; ++i) a->grad[i] += sv2 * self->grad[i];
    }
  });
  return Tensor(out);
}

Tensor relu(const Tensor& ta) {
  require_defined(ta, "relu");
  auto a = ta.node();
  auto out = make_node(a->shape);
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) out->value[i] = a->value[i] > 0.0 ? a->value[i] : 0.0;
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, n] {
    a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      if (a->value[i] > 0.0) a->grad[i] += self->grad[i];
  });
  return Tensor(out);
}

Tensor sigmoid(const Tensor& ta) {
  require_defined(ta, "sigmoid");
  auto a = ta.node();
  auto out = make_node(a->shape);
  std::size_t n = out->value.size();
  for (std::size_t i = 0; i < n; ++i) {
    double x = a->value[i];
    // branch keeps exp() argument negative for stability on both tails
    out->value[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
  }
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, n] {
    a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      double y = self->value[i];
      a->grad[i] += self->grad[i] * y * (1.0 - y);
    }
  });
  return Tensor(out);
}

Tensor transpose(const Tensor& ta) {
  require_defined(ta, "transpose");
  auto a = ta.node();
  require_rank2(a, "transpose");
  int r = a->shape[0], c = a->shape[1];
  auto out = make_node({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<std::size_t>(j) * r + i] =
          a->value[static_cast<std::size_t>(i) * c + j];
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, r, c] {
    a->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        a->grad[static_cast<std::size_t>(i) * c + j] +=
            self->grad[static_cast<std::size_t>(j) * r + i];
  });
  return Tensor(out);
}

Tensor reshape(const Tensor& ta, std::vector<int> shape) {
  require_defined(ta, "reshape");
  auto a = ta.node();
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("reshape: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  if (n != a->numel())
    throw DimensionError("reshape: cannot view " + shape_str(a->shape) + " as " +
                         shape_str(shape));
  auto out = make_node(std::move(shape));
  out->value = a->value;
  detail::Node* self = out.get();
  attach(out, {a}, [self, a] {
    a->ensure_grad();
    std::size_t n2 = a->grad.size();
    for (std::size_t i = 0; i < n2; ++i) a->grad[i] += self->grad[i];
  });
  return Tensor(out);
}

Tensor slice_rows(const Tensor& ta, int r0, int r1) {
  require_defined(ta, "slice_rows");
  auto a = ta.node();
  require_rank2(a, "slice_rows");
  int r = a->shape[0], c = a->shape[1];
  if (r0 < 0 || r1 > r || r0 >= r1)
    throw DimensionError("slice_rows: range [" + std::to_string(r0) + "," +
                         std::to_string(r1) + ") invalid for " + shape_str(a->shape));
  auto out = make_node({r1 - r0, c});
  std::copy(a->value.begin() + static_cast<std::ptrdiff_t>(r0) * c,
            a->value.begin() + static_cast<std::ptrdiff_t>(r1) * c, out->value.begin());
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, r0, c] {
    a->ensure_grad();
    std::size_t n = self->grad.size();
    std::size_t off = static_cast<std::size_t>(r0) * c;
    for (std::size_t i = 0; i < n; ++i) a->grad[off + i] += self->grad[i];
  });
  return Tensor(out);
}

Tensor slice_cols(const Tensor& ta, int c0, int c1) {
  require_defined(ta, "slice_cols");
  auto a = ta.node();
  require_rank2(a, "slice_cols");
  int r = a->shape[0], c = a->shape[1];
  if (c0 < 0 || c1 > c || c0 >= c1)
    throw DimensionError("slice_cols: range [" + std::to_string(c0) + "," +
                         std::to_string(c1) + ") invalid for " + shape_str(a->shape));
  int w = c1 - c0;
  auto out = make_node({r, w});
  for (int i = 0; i < r; ++i)
    std::copy(a->value.begin() + static_cast<std::ptrdiff_t>(i) * c + c0,
              a->value.begin() + static_cast<std::ptrdiff_t>(i) * c + c1,
              out->value.begin() + static_cast<std::ptrdiff_t>(i) * w);
  detail::Node* self = out.get();
  attach(out, {a}, [self, a, r, c, c0, w] {
    a->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        a->grad[static_cast<std::size_t>(i) * c + c0 + j] +=
            self->grad[static_cast<std::size_t>(i) * w + j];
  });
  return Tensor(out);
}

Tensor stack_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("stack_rows: no parts");
  int c = -1, total = 0;
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) {
    require_defined(p, "stack_rows");
    auto n = p.node();
    require_rank2(n, "stack_rows");
    if (c < 0) c = n->shape[1];
    if (n->shape[1] != c)
      throw DimensionError("stack_rows: column mismatch, " + shape_str(n->shape));
    total += n->shape[0];
    nodes.push_back(n);
  }
  auto out = make_node({total, c});
  std::size_t off = 0;
  for (const auto& n : nodes) {
    std::copy(n->value.begin(), n->value.end(), out->value.begin() + off);
    off += n->value.size();
  }
  detail::Node* self = out.get();
  attach(out, nodes, [self, nodes] {
    std::size_t off2 = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        n->ensure_grad();
        std::size_t sz = n->value.size();
        for (std::size_t i = 0; i < sz; ++i) n->grad[i] += self->grad[off2 + i];
      }
      off2 += n->value.size();
    }
  });
  return Tensor(out);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no parts");
  int r = -1, total = 0;
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    auto n = p.node();
    require_rank2(n, "concat_cols");
    if (r < 0) r = n->shape[0];
    if (n->shape[0] != r)
      throw DimensionError("concat_cols: row mismatch, " + shape_str(n->shape));
    total += n->shape[1];
    nodes.push_back(n);
  }
  auto out = make_node({r, total});
  int coff = 0;
  for (const auto& n : nodes) {
    int w = n->shape[1];
    for (int i = 0; i < r; ++i)
      std::copy(n->value.begin() + static_cast<std::ptrdiff_t>(i) * w,
                n->value.begin() + static_cast<std::ptrdiff_t>(i + 1) * w,
                out->value.begin() + static_cast<std::ptrdiff_t>(i) * total + coff);
    coff += w;
  }
  detail::Node* self = out.get();
  int rr = r, tt = total;
  attach(out, nodes, [self, nodes, rr, tt] {
    int coff2 = 0;
    for (const auto& n : nodes) {
      int w = n->shape[1];
      if (n->requires_grad) {
        n->ensure_grad();
        for (int i = 0; i < rr; ++i)
          for (int j = 0; j < w; ++j)
            n->grad[static_cast<std::size_t>(i) * w + j] +=
                self->grad[static_cast<std::size_t>(i) * tt + coff2 + j];
      }
      coff2 += w;
    }
  });
  return Tensor(out);
}

Tensor sum(const Tensor& ta) {
  require_defined(ta, "sum");
  auto a = ta.node();
  auto out = make_node({1, 1});
  double acc = 0.0;
  for (double v : a->value) acc += v;
  out->value[0] = acc;
  detail::Node* self = out.get();
  attach(out, {a}, [self, a] {
    a->ensure_grad();
    double g = self->grad[0];
    for (double& gv : a->grad) gv += g;
  });
  return Tensor(out);
}

Tensor mean(const Tensor& ta) {
  require_defined(ta, "mean");
  auto a = ta.node();
  if (a->numel() == 0) throw DimensionError("mean: empty tensor");
  double inv = 1.0 / static_cast<double>(a->numel());
  return scale(sum(ta), inv);
}

Tensor sum_sq(const Tensor& ta) {
  require_defined(ta, "sum_sq");
  auto a = ta.node();
  auto out = make_node({1, 1});
  double acc = 0.0;
  for (double v : a->value) acc += v * v;
  out->value[0] = acc;
  detail::Node* self = out.get();
  attach(out, {a}, [self, a] {
    a->ensure_grad();
    double g = self->grad[0];
    std::size_t n = a->value.size();
    for (std::size_t i = 0; i < n; ++i) a->grad[i] += 2.0 * g * a->value[i];
  });
  return Tensor(out);
}

Tensor softmax_cross_entropy(const Tensor& tlogits, const std::vector<int>& labels) {
  require_defined(tlogits, "softmax_cross_entropy");
  auto a = tlogits.node();
  require_rank2(a, "softmax_cross_entropy");
  int n = a->shape[0], c = a->shape[1];
  if (static_cast<int>(labels.size()) != n)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  for (int y : labels)
    if (y < 0 || y >= c)
      throw ArgumentError("softmax_cross_entropy: label " + std::to_string(y) +
                          " outside [0," + std::to_string(c) + ")");
  auto out = make_node({1, 1});
  // probs retained for the backward pass
  auto probs = std::make_shared<std::vector<double>>(a->value.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = a->value.data() + static_cast<std::size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    double logz = std::log(z);
    total += -(row[labels[i]] - mx) + logz;
    double* prow = probs->data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) prow[j] = std::exp(row[j] - mx) / z;
  }
  out->value[0] = total / n;
  detail::Node* self = out.get();
  auto lab = labels;
  attach(out, {a}, [self, a, probs, lab, n, c] {
    a->ensure_grad();
    double g = self->grad[0] / n;
    for (int i = 0; i < n; ++i) {
      const double* prow = probs->data() + static_cast<std::size_t>(i) * c;
      double* grow = a->grad.data() + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) grow[j] += g * (prow[j] - (j == lab[i] ? 1.0 : 0.0));
    }
  });
  return Tensor(out);
}

// ---- backward ----------------------------------------------------------

void backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.numel() != 1)
    throw DimensionError("backward: root must be scalar, got " +
                         shape_str(loss.shape()));
  auto root = loss.node();
  if (!root->requires_grad) return;
  if (!std::isfinite(root->value[0]))
    throw NumericError("backward: loss is not finite");

  // iterative post-order DFS over grad-requiring nodes
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      detail::Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) n->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

}  // namespace lio
