#include "idio/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace idio::kern {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect_table(Backend* out) {
  if (const char* env = std::getenv("IDIO_KERNEL_BACKEND")) {
    if (std::strcmp(env, "scalar") == 0) {
      *out = Backend::scalar;
      return &scalar_table();
    }
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2() && avx2_table()) {
      *out = Backend::avx2;
      return avx2_table();
    }
  }
  if (cpu_has_avx2() && avx2_table()) {
    *out = Backend::avx2;
    return avx2_table();
  }
  *out = Backend::scalar;
  return &scalar_table();
}

struct Dispatch {
  Backend backend;
  const KernelTable* table;
  Dispatch() { table = detect_table(&backend); }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

bool avx2_supported() { return cpu_has_avx2() && avx2_table() != nullptr; }

Backend active_backend() { return dispatch().backend; }

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
  if (b == Backend::avx2) {
    if (!avx2_supported())
      throw std::runtime_error("avx2 backend not supported on this CPU/build");
    dispatch().table = avx2_table();
  } else {
    dispatch().table = &scalar_table();
  }
  dispatch().backend = b;
}

double dot(const double* x, const double* y, std::size_t n) {
  return dispatch().table->dot(x, y, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(a, x, y, n);
}
void scale(double a, double* x, std::size_t n) {
  dispatch().table->scale(a, x, n);
}
void hadamard(const double* x, double* y, std::size_t n) {
  dispatch().table->hadamard(x, y, n);
}
double sum(const double* x, std::size_t n) { return dispatch().table->sum(x, n); }
double max_value(const double* x, std::size_t n) {
  return dispatch().table->max_value(x, n);
}
void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  dispatch().table->matvec(w, x, y, rows, cols);
}
void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols) {
  dispatch().table->matvec_acc(w, x, y, rows, cols);
}
void matvec_t_acc(const double* w, const double* dy, double* dx,
                  std::size_t rows, std::size_t cols) {
  dispatch().table->matvec_t_acc(w, dy, dx, rows, cols);
}
void ger_acc(const double* dy, const double* x, double* dw, std::size_t rows,
             std::size_t cols) {
  dispatch().table->ger_acc(dy, x, dw, rows, cols);
}

}  // namespace idio::kern
