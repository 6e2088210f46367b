#include <cmath>

#include "lio/errors.hpp"
#include "lio/tensor.hpp"

namespace lio {

Tensor matrix_exp(const Tensor& ta) {
  if (!ta.defined()) throw StateError("matrix_exp: undefined tensor");
  auto a = ta.node();
  if (a->shape.size() != 2 || a->shape[0] != a->shape[1])
    throw DimensionError("matrix_exp: square matrix required, got " +
                         shape_str(a->shape));
  int m = a->shape[0];
  for (double v : a->value)
    if (!std::isfinite(v)) throw NumericError("matrix_exp: non-finite entry in input");

  // induced 1-norm (max absolute column sum)
  double norm1 = 0.0;
  for (int j = 0; j < m; ++j) {
    double col = 0.0;
    for (int i = 0; i < m; ++i) col += std::abs(a->value[static_cast<std::size_t>(i) * m + j]);
    norm1 = std::max(norm1, col);
  }
  int s = 0;
  if (norm1 > 0.0) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1))) + 1);

  Tensor t = scale(ta, std::ldexp(1.0, -s));
  Tensor id = Tensor::eye(m);

  // degree-12 Taylor polynomial of exp(t), Horner form
  Tensor p = id;
  for (int n = 12; n >= 1; --n) p = add(id, scale(matmul(t, p), 1.0 / n));

  for (int i = 0; i < s; ++i) p = matmul(p, p);
  return p;
}

}  // namespace lio
