#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crossdenoise/nn.hpp"
#include "crossdenoise/rng.hpp"

namespace cdn {

enum class ModelKind { gmf, neumf, cdae };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct TrainSample {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  float label = 0.0f;  // 1 observed, 0 sampled negative
};

struct EpochContext {
  std::uint64_t run_seed = 0;
  int epoch = 1;
  bool training = true;  // corruption masks apply only while training
  // per-user ascending positive-item lists of the train split (CDAE input rows)
  const std::vector<std::vector<std::uint32_t>>* user_positive_items = nullptr;
};

struct BatchLoss {
  double weighted_mean = 0.0;               // mean over the batch of W * loss
  std::vector<double> sample_loss;          // raw unweighted per-sample BCE
};

using GradBuffers = std::vector<std::vector<double>>;  // parallel to tensors()

// Samples per reduction chunk. Chunk partials merge in chunk order, so batch
// gradients are bit-identical for any worker count. chunk_size >= batch size
// degenerates to plain sample-order accumulation (the serial reference).
constexpr std::size_t kGradChunk = 256;

class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual ModelKind kind() const = 0;
  virtual std::uint32_t num_users() const = 0;
  virtual std::uint32_t num_items() const = 0;
  virtual int dim() const = 0;
  // CDAE consumes user rows; its epoch stream groups samples by user.
  virtual bool groups_by_user() const { return false; }

  virtual void init(Rng& rng) = 0;
  virtual std::vector<NamedTensor> tensors() = 0;
  std::vector<NamedTensor> tensors() const {
    return const_cast<Backbone*>(this)->tensors();
  }

  // Weighted mean BCE over the batch plus raw per-sample losses. Weights are
  // constants; gradients flow through the losses only. When `grads` is null
  // only the losses are computed.
  virtual BatchLoss train_batch(std::span<const TrainSample> batch,
                                std::span<const double> weights, GradBuffers* grads,
                                const EpochContext& ctx, int workers = 1,
                                std::size_t chunk_size = kGradChunk) const = 0;

  // Scores for a set of candidate items of one user. `user_train_items` is
  // the user's ascending positive list from the train split (CDAE input row;
  // ignored by GMF/NeuMF). Evaluation scoring is deterministic.
  virtual void score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                           std::span<const std::uint32_t> user_train_items,
                           std::span<double> out) const = 0;

  virtual std::unique_ptr<Backbone> clone() const = 0;
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& snap);
};

struct GmfParams {
  EmbeddingTable user_embeddings;
  EmbeddingTable item_embeddings;
  std::vector<double> output_weights;  // h, length dim
};

class GmfModel final : public Backbone {
 public:
  GmfModel(std::uint32_t num_users, std::uint32_t num_items, int dim);
  ModelKind kind() const override { return ModelKind::gmf; }
  std::uint32_t num_users() const override { return users_; }
  std::uint32_t num_items() const override { return items_; }
  int dim() const override { return dim_; }
  void init(Rng& rng) override;
  std::vector<NamedTensor> tensors() override;
  BatchLoss train_batch(std::span<const TrainSample> batch, std::span<const double> weights,
                        GradBuffers* grads, const EpochContext& ctx, int workers,
                        std::size_t chunk_size) const override;
  void score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                   std::span<const std::uint32_t> user_train_items,
                   std::span<double> out) const override;
  std::unique_ptr<Backbone> clone() const override;

  double forward(std::uint32_t user, std::uint32_t item) const;
  GmfParams params;

 private:
  std::uint32_t users_, items_;
  int dim_;
};

struct NeuMfParams {
  EmbeddingTable gmf_user, gmf_item;
  EmbeddingTable mlp_user, mlp_item;
  std::vector<DenseLayer> tower;       // [2d->2d, 2d->d, d->d/2], relu
  std::vector<double> fusion;          // length d + d/2
};

class NeuMfModel final : public Backbone {
 public:
  NeuMfModel(std::uint32_t num_users, std::uint32_t num_items, int dim);
  ModelKind kind() const override { return ModelKind::neumf; }
  std::uint32_t num_users() const override { return users_; }
  std::uint32_t num_items() const override { return items_; }
  int dim() const override { return dim_; }
  void init(Rng& rng) override;
  std::vector<NamedTensor> tensors() override;
  BatchLoss train_batch(std::span<const TrainSample> batch, std::span<const double> weights,
                        GradBuffers* grads, const EpochContext& ctx, int workers,
                        std::size_t chunk_size) const override;
  void score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                   std::span<const std::uint32_t> user_train_items,
                   std::span<double> out) const override;
  std::unique_ptr<Backbone> clone() const override;

  double forward(std::uint32_t user, std::uint32_t item) const;
  NeuMfParams params;

 private:
  std::uint32_t users_, items_;
  int dim_;
};

struct CdaeParams {
  DenseLayer encoder;               // N -> d, sigmoid
  EmbeddingTable user_node;         // M x d
  DenseLayer decoder;               // d -> N, sigmoid
  double corruption_rate = 0.5;
};

class CdaeModel final : public Backbone {
 public:
  CdaeModel(std::uint32_t num_users, std::uint32_t num_items, int dim,
            double corruption_rate = 0.5);
  ModelKind kind() const override { return ModelKind::cdae; }
  std::uint32_t num_users() const override { return users_; }
  std::uint32_t num_items() const override { return items_; }
  int dim() const override { return dim_; }
  bool groups_by_user() const override { return true; }
  void init(Rng& rng) override;
  std::vector<NamedTensor> tensors() override;
  BatchLoss train_batch(std::span<const TrainSample> batch, std::span<const double> weights,
                        GradBuffers* grads, const EpochContext& ctx, int workers,
                        std::size_t chunk_size) const override;
  void score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                   std::span<const std::uint32_t> user_train_items,
                   std::span<double> out) const override;
  std::unique_ptr<Backbone> clone() const override;

  // Scores for selected items given explicit input columns (already corrupted
  // and rescaled). Shared by training and evaluation.
  void forward_row(std::uint32_t user, std::span<const std::uint32_t> input_items,
                   double input_value, std::span<const std::uint32_t> score_items,
                   std::span<double> hidden_out, std::span<double> scores_out) const;

  CdaeParams params;

 private:
  std::uint32_t users_, items_;
  int dim_;
};

std::unique_ptr<Backbone> make_backbone(ModelKind kind, std::uint32_t num_users,
                                        std::uint32_t num_items, int dim,
                                        double cdae_corruption = 0.5);

GradBuffers make_grad_buffers(const Backbone& model);

// Flat binary container: magic, version, kind, dims, then each named tensor
// as name, count and row-major little-endian doubles.
void save_model(const Backbone& model, const std::filesystem::path& path);
std::unique_ptr<Backbone> load_model(const std::filesystem::path& path);

}  // namespace cdn
