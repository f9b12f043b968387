#include "idio/kernels.hpp"

#include <limits>

namespace idio::kern {
namespace {

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_hadamard(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_max_value(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void s_matvec(const double* w, const double* x, double* y, std::size_t rows,
              std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = s_dot(w + r * cols, x, cols);
}

void s_matvec_acc(const double* w, const double* x, double* y,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += s_dot(w + r * cols, x, cols);
}

void s_matvec_t_acc(const double* w, const double* dy, double* dx,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) s_axpy(dy[r], w + r * cols, dx, cols);
}

void s_ger_acc(const double* dy, const double* x, double* dw, std::size_t rows,
               std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) s_axpy(dy[r], x, dw + r * cols, cols);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      s_dot,    s_axpy,       s_scale,      s_hadamard, s_sum,
      s_max_value, s_matvec, s_matvec_acc, s_matvec_t_acc, s_ger_acc,
  };
  return table;
}

}  // namespace idio::kern
