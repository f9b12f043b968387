#pragma once
// Dense double-precision kernels behind every trainable module.
//
// Two implementations of the same table: a scalar reference and an AVX2+FMA
// variant compiled in its own translation unit. The active table is selected
// at runtime from CPU capabilities (overridable via set_backend() or the
// IDIO_KERNEL_BACKEND environment variable, values "scalar"/"avx2").

#include <cstddef>

namespace idio::kern {

enum class Backend { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
  // y[i] *= x[i]
  void (*hadamard)(const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*max_value)(const double* x, std::size_t n);  // n >= 1
  // y = W x, row-major W of rows x cols
  void (*matvec)(const double* w, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // y += W x
  void (*matvec_acc)(const double* w, const double* x, double* y,
                     std::size_t rows, std::size_t cols);
  // dx += W^T dy
  void (*matvec_t_acc)(const double* w, const double* dy, double* dx,
                       std::size_t rows, std::size_t cols);
  // dW += dy x^T (rank-1 accumulate)
  void (*ger_acc)(const double* dy, const double* x, double* dw,
                  std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when the build lacks the AVX2 TU

bool avx2_supported();
Backend active_backend();
const char* backend_name(Backend b);
// Throws std::runtime_error if the requested backend cannot run here.
void set_backend(Backend b);

// Dispatched entry points (thin forwards through the active table).
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
void hadamard(const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols);
void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols);
void matvec_t_acc(const double* w, const double* dy, double* dx,
                  std::size_t rows, std::size_t cols);
void ger_acc(const double* dy, const double* x, double* dw, std::size_t rows,
             std::size_t cols);

}  // namespace idio::kern
