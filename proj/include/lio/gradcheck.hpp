#pragma once

#include <functional>

#include "lio/tensor.hpp"

namespace lio {

/// Compare the autodiff gradient of scalar-valued `f` at leaf `x` against
/// central finite differences.  Returns the worst discrepancy
///   max_i |analytic_i - fd_i| / max(1, |fd_i|).
/// `x` must require grad; its values are restored on exit.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                  double eps = 1e-5);

}  // namespace lio
