#include "crossdenoise/nn.hpp"

#include <algorithm>
#include <cmath>

#include "crossdenoise/common.hpp"

namespace cdn {

namespace {

double clamp_pred(double y_hat) {
  return std::clamp(y_hat, kBceClamp, 1.0 - kBceClamp);
}

double activate(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::sigmoid: return sigmoid(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

// derivative expressed through the forward output
double activate_grad(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

double bce_loss(double y_hat, double y) {
  double p = clamp_pred(y_hat);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double bce_grad(double y_hat, double y) {
  double p = clamp_pred(y_hat);
  return -y / p + (1.0 - y) / (1.0 - p);
}

void dense_forward(const DenseLayer& layer, std::span<const double> x, std::span<double> y,
                   std::span<double> pre) {
  check(static_cast<int>(x.size()) == layer.in, "dense_forward: input size mismatch");
  check(static_cast<int>(y.size()) == layer.out, "dense_forward: output size mismatch");
  for (int o = 0; o < layer.out; ++o) {
    const double* w = layer.weight.data() + std::size_t(o) * layer.in;
    double s = layer.bias[o];
    for (int i = 0; i < layer.in; ++i) s += w[i] * x[i];
    if (!pre.empty()) pre[o] = s;
    y[o] = activate(layer.act, s);
  }
}

void dense_backward(const DenseLayer& layer, std::span<const double> x, std::span<const double> y,
                    std::span<const double> dy, std::span<double> dw, std::span<double> db,
                    std::span<double> dx) {
  check(static_cast<int>(x.size()) == layer.in && static_cast<int>(y.size()) == layer.out &&
            static_cast<int>(dy.size()) == layer.out,
        "dense_backward: shape mismatch");
  check(dw.size() == layer.weight.size() && static_cast<int>(db.size()) == layer.out,
        "dense_backward: gradient buffer mismatch");
  for (int o = 0; o < layer.out; ++o) {
    double g = dy[o] * activate_grad(layer.act, y[o]);
    db[o] += g;
    const double* w = layer.weight.data() + std::size_t(o) * layer.in;
    double* dwo = dw.data() + std::size_t(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) {
      dwo[i] += g * x[i];
      if (!dx.empty()) dx[i] += g * w[i];
    }
  }
}

void init_embedding(EmbeddingTable& table, Rng& rng, double stddev) {
  for (auto& v : table.values) v = rng.normal(0.0, stddev);
}

void init_dense(DenseLayer& layer, Rng& rng) {
  double bound = std::sqrt(6.0 / (layer.in + layer.out));
  for (auto& v : layer.weight) v = rng.uniform(-bound, bound);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg, const std::string& param_name) {
  check(params.size() == grads.size(), "adam_step: shape mismatch for " + param_name);
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  check(state.first_moment.size() == params.size(), "adam_step: stale state for " + param_name);

  state.step_count += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
  for (std::size_t j = 0; j < params.size(); ++j) {
    double g = grads[j];
    if (std::isnan(g)) throw NumericError("NaN gradient in " + param_name);
    double& m = state.first_moment[j];
    double& v = state.second_moment[j];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    double m_hat = m / c1;
    double v_hat = v / c2;
    params[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(const std::vector<NamedTensor>& tensors, const AdamConfig& cfg)
    : cfg_(cfg), states_(tensors.size()) {}

void AdamOptimizer::step(const std::vector<NamedTensor>& tensors,
                         const std::vector<std::vector<double>>& grads) {
  check(tensors.size() == states_.size() && grads.size() == states_.size(),
        "AdamOptimizer: tensor count mismatch");
  for (std::size_t t = 0; t < tensors.size(); ++t)
    adam_step(*tensors[t].data, grads[t], states_[t], cfg_, tensors[t].name);
}

}  // namespace cdn
