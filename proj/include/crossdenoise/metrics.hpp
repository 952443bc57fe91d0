#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crossdenoise/backbones.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/weighting.hpp"

namespace cdn {

// |top-K of ranked ∩ relevant| / |relevant|
double recall_at_k(std::span<const std::uint32_t> ranked,
                   const std::unordered_set<std::uint32_t>& relevant, int k);

// Binary relevance, 1/log2(pos+1) discount, IDCG truncated at min(|rel|, K).
double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 const std::unordered_set<std::uint32_t>& relevant, int k);

// Top-k item indices by (score desc, item asc). With use_full_sort the whole
// candidate list is sorted first; both paths return identical prefixes.
std::vector<std::uint32_t> top_k_items(std::span<const double> scores,
                                       std::span<const std::uint32_t> candidates, int k,
                                       bool use_full_sort = false);

struct UserEval {
  std::uint32_t user = 0;
  std::vector<double> recall;  // aligned with ks
  std::vector<double> ndcg;
};

struct MetricsReport {
  std::vector<int> ks;
  std::vector<double> recall_mean;
  std::vector<double> ndcg_mean;
  std::vector<UserEval> per_user;  // users with nonempty relevance only

  double recall_at(int k) const;
  double ndcg_at(int k) const;
  // "metric,K,value" rows
  std::string to_csv() const;
  // structured report retaining the per-user vectors
  std::string to_json() const;
};

// Prebuilt per-user context for repeated evaluations against one relevance set.
struct RankingContext {
  std::uint32_t num_items = 0;
  std::vector<std::vector<std::uint32_t>> train_items;     // ranked lists exclude these
  std::vector<std::vector<std::uint32_t>> relevant_items;  // empty -> user skipped
};

// relevance: true-positive interactions to treat as ground truth
// (pass the TP-filtered valid split for model selection, or the test split).
RankingContext make_ranking_context(const InteractionDataset& train,
                                    const InteractionDataset& relevance,
                                    bool relevance_true_positives_only);

// Rank all non-train-interacted items per user and average metrics over
// users with nonempty relevance. Parallel over users; worker count does not
// change the result.
MetricsReport evaluate_ranking(const Backbone& model, const RankingContext& ctx,
                               std::span<const int> ks, int workers = 1);

struct TpFpDiagnostics {
  std::optional<double> tp_loss_mean;
  std::optional<double> fp_loss_mean;
  std::optional<double> tp_weight_mean;
  std::optional<double> fp_weight_mean;
};

// Group means over the positive training samples found in `noise_flags`,
// split by flag; weights come from the table the epoch trained with.
TpFpDiagnostics tp_fp_diagnostics(const LossRecordSet& records, const WeightTable& table,
                                  const std::unordered_map<std::uint64_t, bool>& noise_flags);

std::unordered_map<std::uint64_t, bool> noise_flag_map(const InteractionDataset& ds);

}  // namespace cdn
