#pragma once
// Differentiable building blocks: affine layer, activations, dropout.
// Gradients are hand-derived; every backward here is covered by the
// finite-difference harness in the tests.

#include <cmath>
#include <string>
#include <vector>

#include "idio/rng.hpp"
#include "idio/tensor.hpp"

namespace idio {

double stable_sigmoid(double x);

void sigmoid_vec(const double* x, double* y, std::size_t n);
void tanh_vec(const double* x, double* y, std::size_t n);
// dx[i] += dy[i] * y[i] * (1 - y[i]), y being the sigmoid output
void sigmoid_backward_acc(const double* y, const double* dy, double* dx,
                          std::size_t n);
void tanh_backward_acc(const double* y, const double* dy, double* dx,
                       std::size_t n);

// Max-subtracted softmax; output sums to 1.
void softmax_vec(const double* x, double* y, std::size_t n);
// dx[i] += y[i] * (dy[i] - sum_j dy[j] y[j])
void softmax_backward_acc(const double* y, const double* dy, double* dx,
                          std::size_t n);

// Glorot-style uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void init_uniform_fan(Tensor& w, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);

// y = Wx + b with row-major W (out x in).
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::size_t out_dim, std::size_t in_dim);

  void init(Rng& rng);
  std::size_t in_dim() const { return w.size() ? w.cols() : 0; }
  std::size_t out_dim() const { return w.size() ? w.rows() : 0; }

  void forward(const double* x, double* y) const;
  // Accumulates dw/db; if dx is non-null, dx += W^T dy.
  void backward(const double* x, const double* dy, double* dx);

  void collect(const std::string& prefix, ParamRefs& out);

  Tensor w, b, dw, db;
};

// Inverted dropout: mask entries are 0 or 1/(1-rate); identity at rate 0.
std::vector<double> dropout_mask(std::size_t dim, double rate, Rng& rng);

}  // namespace idio
