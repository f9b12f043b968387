// AVX2+FMA kernel variants. This TU is the only one compiled with -mavx2
// -mfma; callers reach it through the dispatch table after the runtime CPU
// check, so the rest of the binary stays generic.

#include "idio/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <limits>

namespace idio::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(double a, double* x, std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void v_hadamard(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] *= x[i];
}

double v_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_max_value(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d mv = _mm256_set1_pd(m);
    for (; i + 4 <= n; i += 4) mv = _mm256_max_pd(mv, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, mv);
    for (double lane : lanes)
      if (lane > m) m = lane;
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void v_matvec(const double* w, const double* x, double* y, std::size_t rows,
              std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = v_dot(w + r * cols, x, cols);
}

void v_matvec_acc(const double* w, const double* x, double* y,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += v_dot(w + r * cols, x, cols);
}

void v_matvec_t_acc(const double* w, const double* dy, double* dx,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) v_axpy(dy[r], w + r * cols, dx, cols);
}

void v_ger_acc(const double* dy, const double* x, double* dw, std::size_t rows,
               std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) v_axpy(dy[r], x, dw + r * cols, cols);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table = {
      v_dot,    v_axpy,       v_scale,      v_hadamard, v_sum,
      v_max_value, v_matvec, v_matvec_acc, v_matvec_t_acc, v_ger_acc,
  };
  return &table;
}

}  // namespace idio::kern

#else

namespace idio::kern {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace idio::kern

#endif
