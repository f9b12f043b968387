#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace idio {

// Row-major dense tensor of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(count(shape), 0.0);
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at2(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void fill(double v) { data.assign(data.size(), v); }
};

// Named (value, grad) pair; the unit every optimizer/checkpoint walks over.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

using ParamRefs = std::vector<ParamRef>;

inline void zero_grads(ParamRefs& params) {
  for (auto& p : params)
    if (p.grad) p.grad->fill(0.0);
}

}  // namespace idio
