#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crossdenoise/rng.hpp"

namespace cdn {

constexpr double kBceClamp = 1e-7;

// -[y ln p + (1-y) ln(1-p)] with p clamped to [kBceClamp, 1-kBceClamp].
double bce_loss(double y_hat, double y);
// d loss / d y_hat under the same clamping.
double bce_grad(double y_hat, double y);
// Fused gradient at the logit behind a sigmoid output.
inline double bce_logit_grad(double y_hat, double y) { return y_hat - y; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Activation { identity, sigmoid, relu };

struct EmbeddingTable {
  int rows = 0;
  int dim = 0;
  std::vector<double> values;  // row-major rows x dim

  EmbeddingTable() = default;
  EmbeddingTable(int rows_, int dim_) : rows(rows_), dim(dim_), values(std::size_t(rows_) * dim_) {}
  double* row(int r) { return values.data() + std::size_t(r) * dim; }
  const double* row(int r) const { return values.data() + std::size_t(r) * dim; }
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // row-major out x in
  std::vector<double> bias;    // length out
  Activation act = Activation::identity;

  DenseLayer() = default;
  DenseLayer(int in_, int out_, Activation act_)
      : in(in_), out(out_), weight(std::size_t(out_) * in_), bias(out_), act(act_) {}
};

// y = act(W x + b); `pre` receives the pre-activation when non-null.
void dense_forward(const DenseLayer& layer, std::span<const double> x, std::span<double> y,
                   std::span<double> pre = {});

// Exact analytic backward pass. `y` is the forward output (activation
// derivatives are computed from it), `dy` the upstream gradient. Gradients
// are accumulated into dw/db/dx; dx may be empty when not needed.
void dense_backward(const DenseLayer& layer, std::span<const double> x, std::span<const double> y,
                    std::span<const double> dy, std::span<double> dw, std::span<double> db,
                    std::span<double> dx);

// Conventional initialization: embeddings N(0, 0.01), dense weights
// U(+-sqrt(6/(in+out))), biases zero.
void init_embedding(EmbeddingTable& table, Rng& rng, double stddev = 0.01);
void init_dense(DenseLayer& layer, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
};

// Bias-corrected Adam over one named parameter vector. NaN gradients raise
// NumericError carrying the parameter name.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg, const std::string& param_name);

struct NamedTensor {
  std::string name;
  std::vector<double>* data = nullptr;
};

// One AdamState per tensor, stepped together.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const std::vector<NamedTensor>& tensors, const AdamConfig& cfg);
  void step(const std::vector<NamedTensor>& tensors,
            const std::vector<std::vector<double>>& grads);
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<AdamState> states_;
};

}  // namespace cdn
