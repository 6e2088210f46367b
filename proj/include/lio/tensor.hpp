#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lio {

namespace detail {

/// One node of the reverse-mode computation graph.  Values and gradients are
/// dense row-major doubles.  The backprop closure reads this node's grad and
/// accumulates into its parents' grads; it is empty for leaves and for nodes
/// built while gradients are globally disabled.
struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily, only when a backward pass touches it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

/// Dense tensor with reverse-mode autodiff.
///
/// A Tensor is a cheap handle (shared_ptr) onto a graph node.  Operations on
/// tensors whose inputs require gradients record backprop closures; calling
/// backward() on a scalar result fills the .grad() buffers of every
/// grad-requiring node reachable from it.  Rank 1 and rank 2 are supported;
/// matrix operations require rank 2.
class Tensor {
 public:
  Tensor() = default;

  /// Uninitialized storage is never exposed: value-construction zero-fills.
  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);
  /// Identity matrix [n, n].
  static Tensor eye(int n);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int rows() const;
  int cols() const;
  std::size_t numel() const;
  bool requires_grad() const;

  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();  // leaves only; invalid on graph interior
  const std::vector<double>& grad() const;
  void zero_grad();

  /// Scalar extraction; requires numel() == 1.
  double item() const;
  double at(int r, int c) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While a guard is alive, newly built ops record no graph (pure evaluation).
/// Used by inference and evaluation paths.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// ---- graph operations -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
/// m[r,c] + broadcast of v[1,c] over rows.
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor scale(const Tensor& a, double k);
Tensor neg(const Tensor& a);
/// s is a [1,1] tensor in the graph; result = s * a elementwise.
Tensor smul(const Tensor& s, const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);
Tensor stack_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor sum(const Tensor& a);   // [1,1]
Tensor mean(const Tensor& a);  // [1,1]
/// Sum of squared entries, as a [1,1] graph scalar.
Tensor sum_sq(const Tensor& a);

/// Mean cross-entropy of row-wise softmax(logits) against integer labels.
/// Numerically stable (log-sum-exp with max subtraction); one graph node.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Matrix exponential of a square matrix by scaling-and-squaring: the input is
/// scaled by 2^-s with s = max(0, ceil(log2(norm1)) + 1), a 12-term Taylor
/// polynomial is evaluated by Horner's rule, and the result is squared s
/// times.  Built from graph ops, so it is differentiable like any composite.
Tensor matrix_exp(const Tensor& a);

/// Backpropagate from a scalar; fills grad buffers of all reachable
/// grad-requiring nodes (accumulating, like any autodiff engine: callers zero
/// leaf grads between steps).
void backward(const Tensor& loss);

/// Row-major gemm with optional transposes: C = alpha*op(A)*op(B) + beta*C.
/// Dispatches to CBLAS when available, otherwise a portable loop nest.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc);

/// Force the portable loop-nest gemm even when CBLAS is linked (testing hook).
void set_gemm_portable(bool portable);

/// True if every entry is finite.
bool all_finite(const Tensor& a);

std::string shape_str(const std::vector<int>& shape);

}  // namespace lio
