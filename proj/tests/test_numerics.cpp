#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "idio/checkpoint.hpp"
#include "idio/gradcheck.hpp"
#include "idio/nn.hpp"
#include "idio/optim.hpp"
#include "idio/rng.hpp"

using namespace idio;

TEST_CASE("linear forward: identity weights, zero bias") {
  LinearLayer layer(3, 3);
  for (std::size_t i = 0; i < 3; ++i) layer.w.at2(i, i) = 1.0;
  double x[3] = {0.3, -1.2, 4.0};
  double y[3];
  layer.forward(x, y);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("linear forward: zero weights give the bias for any input") {
  LinearLayer layer(2, 4);
  layer.b[0] = 0.7;
  layer.b[1] = -0.2;
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    double x[4], y[2];
    for (double& v : x) v = rng.uniform(-5, 5);
    layer.forward(x, y);
    CHECK(y[0] == doctest::Approx(0.7));
    CHECK(y[1] == doctest::Approx(-0.2));
  }
}

TEST_CASE("linear backward matches finite differences on a random 4x3 layer") {
  Rng rng(11);
  LinearLayer layer(4, 3);
  layer.init(rng);
  for (double& v : layer.b.data) v = rng.uniform(-0.5, 0.5);
  std::vector<double> x = {0.4, -0.9, 1.3};
  std::vector<double> target = {0.1, 0.2, -0.3, 0.4};

  auto loss = [&]() {
    double y[4];
    layer.forward(x.data(), y);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += (y[i] - target[i]) * (y[i] - target[i]);
    return acc;
  };
  ParamRefs params;
  layer.collect("lin", params);
  auto grads = [&]() {
    zero_grads(params);
    double y[4], dy[4];
    layer.forward(x.data(), y);
    for (int i = 0; i < 4; ++i) dy[i] = 2.0 * (y[i] - target[i]);
    layer.backward(x.data(), dy, nullptr);
  };
  CHECK(gradient_check(loss, grads, params, 1e-4) <= 1e-5);
}

TEST_CASE("activation values at zero and softmax of a constant vector") {
  CHECK(stable_sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(std::tanh(0.0) == doctest::Approx(0.0));

  double x[5] = {1.7, 1.7, 1.7, 1.7, 1.7};
  double y[5];
  softmax_vec(x, y, 5);
  for (int i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(0.2));
}

TEST_CASE("softmax output is a probability vector") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    std::vector<double> x(n), y(n);
    for (double& v : x) v = rng.uniform(-30, 30);
    softmax_vec(x.data(), y.data(), n);
    double total = 0.0;
    for (double v : y) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("softmax gradient matches finite differences") {
  Rng rng(17);
  Tensor logits({6});
  for (double& v : logits.data) v = rng.uniform(-2, 2);
  Tensor dlogits({6});
  std::vector<double> coeff(6);
  for (double& v : coeff) v = rng.uniform(-1, 1);

  auto loss = [&]() {
    double y[6];
    softmax_vec(logits.ptr(), y, 6);
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) acc += coeff[i] * y[i];
    return acc;
  };
  ParamRefs params = {{"logits", &logits, &dlogits}};
  auto grads = [&]() {
    dlogits.fill(0.0);
    double y[6];
    softmax_vec(logits.ptr(), y, 6);
    softmax_backward_acc(y, coeff.data(), dlogits.ptr(), 6);
  };
  CHECK(gradient_check(loss, grads, params, 1e-4) <= 1e-5);
}

TEST_CASE("sgd: zero momentum and decay is a plain step") {
  Tensor theta({2});
  theta[0] = 1.0;
  theta[1] = -2.0;
  Tensor grad({2});
  grad[0] = 0.5;
  grad[1] = -1.0;
  ParamRefs params = {{"t", &theta, &grad}};
  SgdMomentum opt({0.1, 0.0, 0.0, 1});
  opt.step(params);
  CHECK(theta[0] == doctest::Approx(1.0 - 0.1 * 0.5));
  CHECK(theta[1] == doctest::Approx(-2.0 + 0.1));
}

TEST_CASE("sgd: zero gradient and zero velocity leaves params unchanged") {
  Tensor theta({3});
  theta.fill(0.25);
  Tensor grad({3});
  ParamRefs params = {{"t", &theta, &grad}};
  SgdMomentum opt({0.1, 0.9, 0.0, 1});
  opt.step(params);
  for (double v : theta.data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("sgd: two momentum steps on a constant gradient displace lr*g*(1+1.9)") {
  Tensor theta({1});
  Tensor grad({1});
  grad[0] = 2.0;
  const double lr = 0.05;
  ParamRefs params = {{"t", &theta, &grad}};
  SgdMomentum opt({lr, 0.9, 0.0, 1});
  opt.step(params);
  grad[0] = 2.0;
  opt.step(params);
  CHECK(theta[0] == doctest::Approx(-lr * 2.0 * (1.0 + 1.9)));
}

TEST_CASE("sgd: lr = 0 is the identity") {
  Tensor theta({4});
  theta.fill(1.5);
  Tensor grad({4});
  grad.fill(3.0);
  ParamRefs params = {{"t", &theta, &grad}};
  SgdMomentum opt({0.0, 0.9, 1e-4, 1});
  opt.step(params);
  for (double v : theta.data) CHECK(v == doctest::Approx(1.5));
}

TEST_CASE("sgd: NaN gradient raises diverged") {
  Tensor theta({1});
  Tensor grad({1});
  grad[0] = std::nan("");
  ParamRefs params = {{"t", &theta, &grad}};
  SgdMomentum opt;
  CHECK_THROWS_WITH_AS(opt.step(params), "diverged", std::runtime_error);
}

TEST_CASE("gradient_check: quadratic is exact up to roundoff") {
  Rng rng(23);
  Tensor theta({5});
  for (double& v : theta.data) v = rng.uniform(-1, 1);
  Tensor grad({5});
  ParamRefs params = {{"t", &theta, &grad}};

  auto loss = [&]() {
    double acc = 0.0;
    for (double v : theta.data) acc += v * v;
    return acc;
  };
  auto grads = [&]() {
    for (std::size_t i = 0; i < 5; ++i) grad[i] = 2.0 * theta[i];
  };
  CHECK(gradient_check(loss, grads, params, 1e-4) <= 1e-7);
}

TEST_CASE("dropout mask: rate 0 is all ones; zero fraction tracks the rate") {
  Rng rng(31);
  auto ones = dropout_mask(64, 0.0, rng);
  for (double v : ones) CHECK(v == doctest::Approx(1.0));

  const std::size_t n = 100000;
  auto mask = dropout_mask(n, 0.2, rng);
  std::size_t zeros = 0;
  double mean = 0.0;
  for (double v : mask) {
    if (v == 0.0) ++zeros;
    mean += v;
  }
  mean /= static_cast<double>(n);
  CHECK(std::fabs(static_cast<double>(zeros) / n - 0.2) <= 0.005);
  CHECK(std::fabs(mean - 1.0) <= 0.01);  // inverted scaling is unbiased
}

TEST_CASE("checkpoint round-trip preserves tensors and is byte-stable") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "idio_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  Rng rng(3);
  Tensor a({3, 4});
  for (double& v : a.data) v = rng.uniform(-1, 1);
  Tensor b({7});
  for (double& v : b.data) v = rng.uniform(-1, 1);
  save_checkpoint(path, {{"m.a", &a}, {"m.b", &b}});

  auto loaded = read_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("m.a").shape == a.shape);
  CHECK(loaded.at("m.a").data == a.data);
  CHECK(loaded.at("m.b").data == b.data);

  const std::string path2 = (dir / "model2.ckpt").string();
  save_checkpoint(path2, {{"m.a", &a}, {"m.b", &b}});
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);

  Tensor a2({3, 4}), b2({7});
  Tensor da2({3, 4}), db2({7});
  ParamRefs refs = {{"m.a", &a2, &da2}, {"m.b", &b2, &db2}};
  load_checkpoint(path, refs);
  CHECK(a2.data == a.data);

  ParamRefs missing = {{"m.zzz", &a2, &da2}};
  CHECK_THROWS_AS(load_checkpoint(path, missing), std::runtime_error);
  Tensor wrong({4, 3});
  ParamRefs bad_shape = {{"m.a", &wrong, nullptr}};
  CHECK_THROWS_AS(load_checkpoint(path, bad_shape), std::runtime_error);
  fs::remove_all(dir);
}
