#include "idio/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace idio {

void SgdMomentum::step(ParamRefs& params) {
  if (cfg_.learning_rate < 0.0)
    throw std::invalid_argument("learning_rate must be >= 0");
  if (cfg_.momentum < 0.0 || cfg_.momentum >= 1.0)
    throw std::invalid_argument("momentum must be in [0,1)");

  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params) velocity_.emplace_back(p.value->shape);
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k].value;
    const Tensor& g = *params[k].grad;
    Tensor& v = velocity_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (!std::isfinite(g[i])) throw std::runtime_error("diverged");
      v[i] = cfg_.momentum * v[i] -
             cfg_.learning_rate * (g[i] + cfg_.weight_decay * theta[i]);
      theta[i] += v[i];
    }
  }
}

}  // namespace idio
