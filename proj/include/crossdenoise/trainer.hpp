#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crossdenoise/backbones.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/metrics.hpp"
#include "crossdenoise/weighting.hpp"

namespace cdn {

struct TrainConfig {
  ModelKind model = ModelKind::gmf;
  double alpha = 1.0;  // reputation bounds, searched in [0, 5]
  double beta = 1.0;
  double lr = 1e-3;
  int batch_size = 2048;
  int negative_ratio = 1;
  int embedding_dim = 32;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 17;
  WeightStrategyConfig strategy;
  ComponentToggles components;
  double weight_decay = 0.0;  // optional knob; Eq-style objective carries none
  double cdae_corruption = 0.5;
  std::vector<int> eval_ks = {50, 100};
  int selection_k = 50;  // early stopping on Recall@selection_k
  int workers = 1;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;  // weighted mean over the epoch's samples
  double recall = 0.0;      // validation Recall@selection_k
  double ndcg = 0.0;        // validation NDCG@selection_k
  std::optional<double> tp_loss, fp_loss, tp_weight, fp_weight;
  double seconds = 0.0;     // wall clock; diagnostics only, not an artifact value
};

struct TrainResult {
  std::unique_ptr<Backbone> model;  // restored to the best validation epoch
  int best_epoch = 0;
  double best_score = 0.0;
  std::vector<EpochReport> reports;
  bool early_stopped = false;
  WeightTable final_table;  // the table the next epoch would have trained with
};

using EpochObserver = std::function<void(int epoch, const Backbone& model)>;

// One training run of the per-epoch reweighting loop: sample negatives,
// optimize weighted mini-batches under the previous epoch's table, collect
// loss statistics, then rebuild the table (base weights x reputation outer
// product) for the next epoch. Early stopping on the validation metric.
TrainResult train(const DataSplit& split, const TrainConfig& config,
                  const EpochObserver& observer = {});

// Reference loop with no weighting machinery at all: plain mean BCE, no
// statistics, no tables. Shares every random stream with train(), so a
// uniform all-components-off run must match it bitwise.
TrainResult train_unweighted(const DataSplit& split, const TrainConfig& config,
                             const EpochObserver& observer = {});

// Recall/NDCG over the true-positive validation interactions.
MetricsReport validate_model(const Backbone& model, const DataSplit& split,
                             std::span<const int> ks, int workers = 1);

// "epoch,loss,recall50,ndcg50,tp_loss,fp_loss,tp_weight,fp_weight,seconds"
// rows. The seconds column stays empty so artifacts are byte-stable; wall
// times live in the returned reports and the console log.
std::string epoch_reports_csv(const std::vector<EpochReport>& reports);

struct AblationRow {
  ComponentToggles toggles;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> per_seed_test;  // aligned with seeds
  std::vector<double> recall_mean;           // aligned with eval_ks
  std::vector<double> ndcg_mean;
};

// One full train per toggle combination with shared seeds; metrics on the
// test split. Rows follow the component table: none, BW, BW+IF, BW+UF, all.
std::vector<AblationRow> ablate(const DataSplit& split, const TrainConfig& base,
                                const std::vector<ComponentToggles>& grid,
                                const std::vector<std::uint64_t>& seeds);

std::vector<ComponentToggles> default_ablation_grid();

}  // namespace cdn
