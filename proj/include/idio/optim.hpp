#pragma once

#include <vector>

#include "idio/tensor.hpp"

namespace idio {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 1000;
};

// v <- momentum*v - lr*(g + weight_decay*theta); theta <- theta + v.
class SgdMomentum {
 public:
  explicit SgdMomentum(SgdConfig cfg = {}) : cfg_(cfg) {}

  const SgdConfig& config() const { return cfg_; }
  SgdConfig& config() { return cfg_; }

  // Throws std::runtime_error("diverged") on non-finite gradients.
  void step(ParamRefs& params);

  void reset() { velocity_.clear(); }

 private:
  SgdConfig cfg_;
  std::vector<Tensor> velocity_;
};

}  // namespace idio
