#include "lio/gradcheck.hpp"

#include <cmath>

#include "lio/errors.hpp"

namespace lio {

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps) {
  if (!x.defined()) throw StateError("grad_check: undefined tensor");
  if (!x.requires_grad()) throw ArgumentError("grad_check: x must require grad");
  if (eps <= 0.0) throw ArgumentError("grad_check: eps must be positive");

  x.zero_grad();
  Tensor y = f(x);
  if (y.numel() != 1)
    throw DimensionError("grad_check: f must return a scalar, got " +
                         shape_str(y.shape()));
  backward(y);
  std::vector<double> analytic = x.grad();

  auto& vals = x.node()->value;
  double worst = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double keep = vals[i];
    vals[i] = keep + eps;
    double fp = f(x).item();
    vals[i] = keep - eps;
    double fm = f(x).item();
    vals[i] = keep;
    double fd = (fp - fm) / (2.0 * eps);
    double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace lio
