#include "idio/nn.hpp"

#include <stdexcept>

#include "idio/kernels.hpp"

namespace idio {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void sigmoid_vec(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = stable_sigmoid(x[i]);
}

void tanh_vec(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void sigmoid_backward_acc(const double* y, const double* dy, double* dx,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

void tanh_backward_acc(const double* y, const double* dy, double* dx,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

void softmax_vec(const double* x, double* y, std::size_t n) {
  const double m = kern::max_value(x, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - m);
    total += y[i];
  }
  kern::scale(1.0 / total, y, n);
}

void softmax_backward_acc(const double* y, const double* dy, double* dx,
                          std::size_t n) {
  const double inner = kern::dot(y, dy, n);
  for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (dy[i] - inner);
}

void init_uniform_fan(Tensor& w, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.uniform(-a, a);
}

LinearLayer::LinearLayer(std::size_t out_dim, std::size_t in_dim)
    : w({out_dim, in_dim}),
      b({out_dim}),
      dw({out_dim, in_dim}),
      db({out_dim}) {}

void LinearLayer::init(Rng& rng) { init_uniform_fan(w, in_dim(), out_dim(), rng); }

void LinearLayer::forward(const double* x, double* y) const {
  kern::matvec(w.ptr(), x, y, out_dim(), in_dim());
  kern::axpy(1.0, b.ptr(), y, out_dim());
}

void LinearLayer::backward(const double* x, const double* dy, double* dx) {
  kern::ger_acc(dy, x, dw.ptr(), out_dim(), in_dim());
  kern::axpy(1.0, dy, db.ptr(), out_dim());
  if (dx) kern::matvec_t_acc(w.ptr(), dy, dx, out_dim(), in_dim());
}

void LinearLayer::collect(const std::string& prefix, ParamRefs& out) {
  out.push_back({prefix + ".weight", &w, &dw});
  out.push_back({prefix + ".bias", &b, &db});
}

std::vector<double> dropout_mask(std::size_t dim, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout rate must be in [0,1)");
  std::vector<double> mask(dim, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 - rate;
  for (double& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

}  // namespace idio
