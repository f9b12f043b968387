#pragma once
// GRU cell: update gate u, relevant gate r, candidate c, each an affine map
// over the concatenation [h_prev; g]:
//   u = sigmoid(W_u [h;g] + b_u)
//   r = sigmoid(W_r [h;g] + b_r)
//   c = tanh(W_c [r*h; g] + b_c)
//   h' = u*c + (1-u)*h

#include <string>
#include <vector>

#include "idio/nn.hpp"
#include "idio/rng.hpp"

namespace idio {

class GruCell {
 public:
  GruCell() = default;
  GruCell(std::size_t hidden_dim, std::size_t input_dim);

  void init(Rng& rng);
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t input_dim() const { return input_; }

  struct Cache {
    std::vector<double> concat;     // [h_prev; g]
    std::vector<double> rh_concat;  // [r*h_prev; g]
    std::vector<double> u, r, c;    // gate activations
    std::vector<double> h_prev;
  };

  void forward(const double* h_prev, const double* g, double* h, Cache* cache) const;

  // dL/dh -> parameter grads; dh_prev and dg are accumulated into.
  void backward(const Cache& cache, const double* dh, double* dh_prev, double* dg);

  void zero_grad();
  void collect(const std::string& prefix, ParamRefs& out);

 private:
  std::size_t hidden_ = 0, input_ = 0;
  LinearLayer update_, relevant_, candidate_;
};

}  // namespace idio
