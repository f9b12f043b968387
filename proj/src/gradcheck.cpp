#include "idio/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace idio {

double gradient_check(const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      ParamRefs& params, double eps) {
  compute_grads();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k].value;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + eps;
      const double f_plus = loss();
      theta[i] = saved - eps;
      const double f_minus = loss();
      theta[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace idio
