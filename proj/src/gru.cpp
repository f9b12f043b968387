#include "idio/gru.hpp"

#include <stdexcept>

namespace idio {

GruCell::GruCell(std::size_t hidden_dim, std::size_t input_dim)
    : hidden_(hidden_dim),
      input_(input_dim),
      update_(hidden_dim, hidden_dim + input_dim),
      relevant_(hidden_dim, hidden_dim + input_dim),
      candidate_(hidden_dim, hidden_dim + input_dim) {}

void GruCell::init(Rng& rng) {
  update_.init(rng);
  relevant_.init(rng);
  candidate_.init(rng);
}

void GruCell::forward(const double* h_prev, const double* g, double* h,
                      Cache* cache) const {
  const std::size_t n = hidden_, m = input_;
  std::vector<double> concat(n + m);
  std::copy(h_prev, h_prev + n, concat.begin());
  std::copy(g, g + m, concat.begin() + static_cast<long>(n));

  std::vector<double> pre(n), u(n), r(n), c(n);
  update_.forward(concat.data(), pre.data());
  sigmoid_vec(pre.data(), u.data(), n);
  relevant_.forward(concat.data(), pre.data());
  sigmoid_vec(pre.data(), r.data(), n);

  std::vector<double> rh_concat(n + m);
  for (std::size_t i = 0; i < n; ++i) rh_concat[i] = r[i] * h_prev[i];
  std::copy(g, g + m, rh_concat.begin() + static_cast<long>(n));
  candidate_.forward(rh_concat.data(), pre.data());
  tanh_vec(pre.data(), c.data(), n);

  for (std::size_t i = 0; i < n; ++i)
    h[i] = u[i] * c[i] + (1.0 - u[i]) * h_prev[i];

  if (cache) {
    cache->concat = std::move(concat);
    cache->rh_concat = std::move(rh_concat);
    cache->u = std::move(u);
    cache->r = std::move(r);
    cache->c = std::move(c);
    cache->h_prev.assign(h_prev, h_prev + n);
  }
}

void GruCell::backward(const Cache& cache, const double* dh, double* dh_prev,
                       double* dg) {
  const std::size_t n = hidden_, m = input_;
  std::vector<double> du(n), dc(n), da(n);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = dh[i] * (cache.c[i] - cache.h_prev[i]);
    dc[i] = dh[i] * cache.u[i];
    dh_prev[i] += dh[i] * (1.0 - cache.u[i]);
  }

  // candidate: c = tanh(W_c rh_concat + b_c)
  for (std::size_t i = 0; i < n; ++i)
    da[i] = dc[i] * (1.0 - cache.c[i] * cache.c[i]);
  std::vector<double> drh(n + m, 0.0);
  candidate_.backward(cache.rh_concat.data(), da.data(), drh.data());
  std::vector<double> dr(n);
  for (std::size_t i = 0; i < n; ++i) {
    dr[i] = drh[i] * cache.h_prev[i];
    dh_prev[i] += drh[i] * cache.r[i];
  }
  for (std::size_t i = 0; i < m; ++i) dg[i] += drh[n + i];

  // gates over [h_prev; g]
  std::vector<double> dconcat(n + m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    da[i] = du[i] * cache.u[i] * (1.0 - cache.u[i]);
  update_.backward(cache.concat.data(), da.data(), dconcat.data());
  for (std::size_t i = 0; i < n; ++i)
    da[i] = dr[i] * cache.r[i] * (1.0 - cache.r[i]);
  relevant_.backward(cache.concat.data(), da.data(), dconcat.data());

  for (std::size_t i = 0; i < n; ++i) dh_prev[i] += dconcat[i];
  for (std::size_t i = 0; i < m; ++i) dg[i] += dconcat[n + i];
}

void GruCell::zero_grad() {
  update_.dw.fill(0.0);
  update_.db.fill(0.0);
  relevant_.dw.fill(0.0);
  relevant_.db.fill(0.0);
  candidate_.dw.fill(0.0);
  candidate_.db.fill(0.0);
}

void GruCell::collect(const std::string& prefix, ParamRefs& out) {
  update_.collect(prefix + ".update", out);
  relevant_.collect(prefix + ".relevant", out);
  candidate_.collect(prefix + ".candidate", out);
}

}  // namespace idio
