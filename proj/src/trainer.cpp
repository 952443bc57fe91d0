#include "crossdenoise/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "crossdenoise/common.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/parallel.hpp"
#include "crossdenoise/rng.hpp"

namespace cdn {

void TrainConfig::validate() const {
  check(alpha >= 0.0 && alpha <= beta, "config: need 0 <= alpha <= beta");
  check(batch_size >= 1, "config: batch_size must be >= 1");
  check(patience >= 1, "config: patience must be >= 1");
  check(max_epochs >= 1, "config: max_epochs must be >= 1");
  check(negative_ratio >= 1, "config: negative_ratio must be >= 1");
  check(embedding_dim >= 1, "config: embedding_dim must be >= 1");
  check(lr > 0.0, "config: learning rate must be positive");
  check(weight_decay >= 0.0, "config: weight_decay must be >= 0");
  check(!eval_ks.empty(), "config: eval_ks must not be empty");
  check(strategy.remember_rate > 0.0 && strategy.remember_rate <= 1.0,
        "config: remember rate in (0, 1]");
}

namespace {

struct EpochStream {
  std::vector<TrainSample> samples;
  std::vector<std::pair<std::size_t, std::size_t>> batches;
};

// Positives plus this epoch's negatives in the model's batch layout. Both the
// sample order and the batch boundaries depend only on (seed, epoch).
EpochStream build_epoch_stream(const InteractionDataset& train, const NegativeSet& negatives,
                               const TrainConfig& config, int epoch, bool group_by_user) {
  EpochStream stream;
  stream.samples.reserve(train.interactions.size() + negatives.samples.size());
  Rng rng(derive_seed(config.seed, Stream::shuffle, static_cast<std::uint64_t>(epoch)));

  if (!group_by_user) {
    for (const auto& x : train.interactions)
      stream.samples.push_back(TrainSample{x.user, x.item, 1.0f});
    for (const auto& [u, i] : negatives.samples)
      stream.samples.push_back(TrainSample{u, i, 0.0f});
    rng.shuffle(stream.samples);
    std::size_t b = static_cast<std::size_t>(config.batch_size);
    for (std::size_t s = 0; s < stream.samples.size(); s += b)
      stream.batches.emplace_back(s, std::min(stream.samples.size(), s + b));
    return stream;
  }

  // user-grouped layout: per-user positives then that user's sampled negatives
  std::vector<std::vector<TrainSample>> by_user(train.num_users);
  for (const auto& x : train.interactions)
    by_user[x.user].push_back(TrainSample{x.user, x.item, 1.0f});
  for (const auto& [u, i] : negatives.samples) by_user[u].push_back(TrainSample{u, i, 0.0f});

  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < train.num_users; ++u)
    if (!by_user[u].empty()) users.push_back(u);
  rng.shuffle(users);

  std::size_t batch_begin = 0;
  std::size_t target = static_cast<std::size_t>(config.batch_size);
  for (std::uint32_t u : users) {
    std::size_t here = stream.samples.size();
    if (here > batch_begin && here - batch_begin + by_user[u].size() > target) {
      stream.batches.emplace_back(batch_begin, here);
      batch_begin = here;
    }
    stream.samples.insert(stream.samples.end(), by_user[u].begin(), by_user[u].end());
  }
  if (stream.samples.size() > batch_begin)
    stream.batches.emplace_back(batch_begin, stream.samples.size());
  return stream;
}

void apply_weight_decay(const std::vector<NamedTensor>& tensors, GradBuffers& grads, double wd) {
  if (wd <= 0.0) return;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto& p = *tensors[t].data;
    for (std::size_t j = 0; j < p.size(); ++j) grads[t][j] += wd * p[j];
  }
}

struct RunMode {
  bool weighting = true;
};

TrainResult run_training(const DataSplit& split, const TrainConfig& config,
                         const EpochObserver& observer, RunMode mode) {
  config.validate();
  check(!split.train.interactions.empty(), "train: empty train split");

  auto model = make_backbone(config.model, split.train.num_users, split.train.num_items,
                             config.embedding_dim, config.cdae_corruption);
  {
    Rng init_rng(derive_seed(config.seed, Stream::init));
    model->init(init_rng);
  }
  auto tensors = model->tensors();
  AdamOptimizer optimizer(tensors, AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  GradBuffers grads = make_grad_buffers(*model);

  auto user_positives = items_by_user(split.train);
  auto flags = noise_flag_map(split.train);
  RankingContext valid_ctx = make_ranking_context(split.train, split.valid, true);

  std::vector<int> ks = config.eval_ks;
  if (std::find(ks.begin(), ks.end(), config.selection_k) == ks.end())
    ks.push_back(config.selection_k);

  WeightTable table;  // epoch 1 trains at weight 1 everywhere
  EntityLossStats stats(split.train.num_users, split.train.num_items);
  LossRecordSet records;

  TrainResult result;
  std::vector<std::vector<double>> best_snapshot;
  double best_score = -1.0;
  int best_epoch = 0;
  int since_improvement = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    NegativeSet negatives =
        sample_negatives(split.train, config.negative_ratio, config.seed, epoch);
    EpochStream stream = build_epoch_stream(split.train, negatives, config, epoch,
                                            model->groups_by_user());

    if (mode.weighting) {
      records.clear();
      records.reserve(stream.samples.size());
      stats.reset();
    }

    EpochContext ctx;
    ctx.run_seed = config.seed;
    ctx.epoch = epoch;
    ctx.training = true;
    ctx.user_positive_items = &user_positives;

    double loss_sum = 0.0;
    std::vector<double> weights;
    for (auto [b0, b1] : stream.batches) {
      std::span<const TrainSample> batch(stream.samples.data() + b0, b1 - b0);
      weights.assign(batch.size(), 1.0);
      if (mode.weighting)
        for (std::size_t j = 0; j < batch.size(); ++j)
          weights[j] = table.lookup(batch[j].user, batch[j].item);

      BatchLoss batch_out =
          model->train_batch(batch, weights, &grads, ctx, config.workers, kGradChunk);
      apply_weight_decay(tensors, grads, config.weight_decay);
      optimizer.step(tensors, grads);

      loss_sum += batch_out.weighted_mean * static_cast<double>(batch.size());
      if (mode.weighting)
        for (std::size_t j = 0; j < batch.size(); ++j)
          records.push_back(LossRecord{batch[j].user, batch[j].item, batch_out.sample_loss[j]});
    }
    double epoch_loss = loss_sum / static_cast<double>(stream.samples.size());
    if (!std::isfinite(epoch_loss))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = epoch_loss;

    if (mode.weighting) {
      // diagnostics first: they describe the weights this epoch trained with
      TpFpDiagnostics diag = tp_fp_diagnostics(records, table, flags);
      report.tp_loss = diag.tp_loss_mean;
      report.fp_loss = diag.fp_loss_mean;
      report.tp_weight = diag.tp_weight_mean;
      report.fp_weight = diag.fp_weight_mean;

      // end-of-epoch weight update for epoch t+1
      accumulate(stats, records);
      auto [user_avg, item_avg] = mean_entity_loss(stats);
      ReputationVector user_rep = rank_map(user_avg, config.alpha, config.beta);
      ReputationVector item_rep = rank_map(item_avg, config.alpha, config.beta);
      std::vector<double> base = base_weights(records, config.strategy, config.workers);
      table = fuse(base, user_rep, item_rep, records, config.components);
    }

    MetricsReport valid = evaluate_ranking(*model, valid_ctx, ks, config.workers);
    report.recall = valid.recall_at(config.selection_k);
    report.ndcg = valid.ndcg_at(config.selection_k);
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(report);

    if (observer) observer(epoch, *model);

    if (report.recall > best_score) {
      best_score = report.recall;
      best_epoch = epoch;
      best_snapshot = model->snapshot();
      since_improvement = 0;
    } else if (++since_improvement >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }

  if (!best_snapshot.empty()) model->restore(best_snapshot);
  result.model = std::move(model);
  result.best_epoch = best_epoch;
  result.best_score = best_score;
  if (mode.weighting) result.final_table = std::move(table);
  return result;
}

}  // namespace

TrainResult train(const DataSplit& split, const TrainConfig& config,
                  const EpochObserver& observer) {
  return run_training(split, config, observer, RunMode{true});
}

TrainResult train_unweighted(const DataSplit& split, const TrainConfig& config,
                             const EpochObserver& observer) {
  return run_training(split, config, observer, RunMode{false});
}

MetricsReport validate_model(const Backbone& model, const DataSplit& split,
                             std::span<const int> ks, int workers) {
  RankingContext ctx = make_ranking_context(split.train, split.valid, true);
  return evaluate_ranking(model, ctx, ks, workers);
}

std::string epoch_reports_csv(const std::vector<EpochReport>& reports) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt_fixed(*v, 6) : std::string(); };
  std::string out = "epoch,loss,recall50,ndcg50,tp_loss,fp_loss,tp_weight,fp_weight,seconds\n";
  for (const auto& r : reports) {
    // seconds stays empty: wall time varies run to run, artifacts must not
    out += csv_row({std::to_string(r.epoch), fmt_fixed(r.train_loss, 6), fmt_fixed(r.recall, 6),
                    fmt_fixed(r.ndcg, 6), opt(r.tp_loss), opt(r.fp_loss), opt(r.tp_weight),
                    opt(r.fp_weight), std::string()});
  }
  return out;
}

std::vector<ComponentToggles> default_ablation_grid() {
  return {ComponentToggles{false, false, false}, ComponentToggles{true, false, false},
          ComponentToggles{true, true, false}, ComponentToggles{true, false, true},
          ComponentToggles{true, true, true}};
}

std::vector<AblationRow> ablate(const DataSplit& split, const TrainConfig& base,
                                const std::vector<ComponentToggles>& grid,
                                const std::vector<std::uint64_t>& seeds) {
  check(!grid.empty() && !seeds.empty(), "ablate: empty grid or seeds");
  for (const auto& t : grid)
    check(t.base_weight || (!t.item_factor && !t.user_factor),
          "ablate: entity factors require the base weight");

  RankingContext test_ctx = make_ranking_context(split.train, split.test, false);
  std::vector<AblationRow> rows;
  for (const auto& toggles : grid) {
    AblationRow row;
    row.toggles = toggles;
    row.seeds = seeds;
    row.recall_mean.assign(base.eval_ks.size(), 0.0);
    row.ndcg_mean.assign(base.eval_ks.size(), 0.0);
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.components = toggles;
      cfg.seed = seed;
      TrainResult res = train(split, cfg);
      MetricsReport test =
          evaluate_ranking(*res.model, test_ctx, base.eval_ks, base.workers);
      for (std::size_t j = 0; j < base.eval_ks.size(); ++j) {
        row.recall_mean[j] += test.recall_mean[j];
        row.ndcg_mean[j] += test.ndcg_mean[j];
      }
      row.per_seed_test.push_back(std::move(test));
    }
    for (std::size_t j = 0; j < base.eval_ks.size(); ++j) {
      row.recall_mean[j] /= static_cast<double>(seeds.size());
      row.ndcg_mean[j] /= static_cast<double>(seeds.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cdn
