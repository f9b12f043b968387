#pragma once
// Central finite-difference check used by every trainable module's tests.

#include <functional>

#include "idio/tensor.hpp"

namespace idio {

// `loss` evaluates the scalar objective at the current parameter values.
// `compute_grads` must leave analytic gradients in the params' grad tensors
// (overwriting, not accumulating on top of stale values).
// Returns the max elementwise relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
double gradient_check(const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      ParamRefs& params, double eps);

}  // namespace idio
