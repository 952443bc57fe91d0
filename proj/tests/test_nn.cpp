#include <cmath>

#include "doctest.h"

#include "crossdenoise/common.hpp"
#include "crossdenoise/nn.hpp"
#include "crossdenoise/rng.hpp"

using namespace cdn;

TEST_SUITE_BEGIN("nn");

TEST_CASE("bce_loss analytic values") {
  CHECK(bce_loss(0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(1.0 - 1e-7, 1.0) == doctest::Approx(1e-7).epsilon(1e-3));
  CHECK(bce_loss(0.9, 0.0) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("bce stays finite under the clamp") {
  CHECK(std::isfinite(bce_loss(0.0, 1.0)));
  CHECK(std::isfinite(bce_loss(1.0, 0.0)));
  CHECK(std::isfinite(bce_grad(0.0, 1.0)));
}

TEST_CASE("bce_grad analytic values and logit form") {
  CHECK(bce_grad(0.5, 1.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(bce_logit_grad(0.5, 1.0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("bce_grad matches central finite differences") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    double y_hat = rng.uniform(0.02, 0.98);
    double y = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double h = 1e-5;
    double fd = (bce_loss(y_hat + h, y) - bce_loss(y_hat - h, y)) / (2.0 * h);
    CHECK(std::abs(bce_grad(y_hat, y) - fd) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  std::vector<double> params = {1.0, -2.0, 3.0};
  std::vector<double> grads = {0.0, 0.0, 0.0};
  AdamState state;
  adam_step(params, grads, state, AdamConfig{}, "p");
  CHECK(state.step_count == 1);
  CHECK(params == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: constant gradient moves parameters against its sign") {
  std::vector<double> params = {0.0};
  AdamState state;
  AdamConfig cfg;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> grads = {1.0};
    adam_step(params, grads, state, cfg, "p");
  }
  CHECK(params[0] < 0.0);
}

TEST_CASE("adam: first step magnitude is about lr") {
  std::vector<double> params = {0.0};
  std::vector<double> grads = {1.0};
  AdamState state;
  AdamConfig cfg;
  adam_step(params, grads, state, cfg, "p");
  // m_hat = 1, v_hat = 1 after bias correction, so the step is lr/(1 + eps)
  CHECK(params[0] == doctest::Approx(-cfg.lr).epsilon(1e-6));
}

TEST_CASE("adam rejects NaN gradients by parameter name") {
  std::vector<double> params = {0.0};
  std::vector<double> grads = {std::nan("")};
  AdamState state;
  CHECK_THROWS_WITH_AS(adam_step(params, grads, state, AdamConfig{}, "fusion"),
                       doctest::Contains("fusion"), NumericError);
}

TEST_CASE("adam is deterministic given the gradient sequence") {
  auto run = [] {
    std::vector<double> params = {0.3, -0.2};
    AdamState state;
    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> grads = {rng.normal(), rng.normal()};
      adam_step(params, grads, state, AdamConfig{}, "p");
    }
    return params;
  };
  CHECK(run() == run());
}

TEST_CASE("dense identity layer reproduces its input") {
  DenseLayer layer(3, 3, Activation::identity);
  for (int j = 0; j < 3; ++j) layer.weight[std::size_t(j) * 3 + j] = 1.0;
  std::vector<double> x = {0.5, -1.0, 2.0}, y(3);
  dense_forward(layer, x, y);
  CHECK(y == x);
}

TEST_CASE("dense sigmoid layer with zero weights outputs one half") {
  DenseLayer layer(4, 2, Activation::sigmoid);
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0}, y(2);
  dense_forward(layer, x, y);
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(0.5));
}

TEST_CASE("dense backward matches finite differences on a random 4x3 layer") {
  Rng rng(17);
  for (auto act : {Activation::identity, Activation::sigmoid, Activation::relu}) {
    DenseLayer layer(3, 4, act);
    init_dense(layer, rng);
    for (auto& b : layer.bias) b = rng.uniform(0.05, 0.3);  // keep relu off its kink
    std::vector<double> x = {rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> dy = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};

    auto objective = [&]() {
      std::vector<double> y(4);
      dense_forward(layer, x, y);
      double s = 0.0;
      for (int o = 0; o < 4; ++o) s += dy[o] * y[o];
      return s;
    };

    std::vector<double> y(4), dw(12, 0.0), db(4, 0.0), dx(3, 0.0);
    dense_forward(layer, x, y);
    dense_backward(layer, x, y, dy, dw, db, dx);

    double h = 1e-5;
    double worst = 0.0;
    for (std::size_t j = 0; j < layer.weight.size(); ++j) {
      double keep = layer.weight[j];
      layer.weight[j] = keep + h;
      double up = objective();
      layer.weight[j] = keep - h;
      double dn = objective();
      layer.weight[j] = keep;
      worst = std::max(worst, std::abs(dw[j] - (up - dn) / (2 * h)));
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      double keep = x[j];
      x[j] = keep + h;
      double up = objective();
      x[j] = keep - h;
      double dn = objective();
      x[j] = keep;
      worst = std::max(worst, std::abs(dx[j] - (up - dn) / (2 * h)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_SUITE_END();
