#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cdn {

struct LossRecord {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double loss = 0.0;
};

// One entry per training-sample occurrence of an epoch (positives and sampled
// negatives; repeated negative draws repeat here).
using LossRecordSet = std::vector<LossRecord>;

struct EntityLossStats {
  std::vector<double> user_loss_sum;
  std::vector<std::int64_t> user_count;
  std::vector<double> item_loss_sum;
  std::vector<std::int64_t> item_count;

  EntityLossStats() = default;
  EntityLossStats(std::uint32_t num_users, std::uint32_t num_items)
      : user_loss_sum(num_users), user_count(num_users), item_loss_sum(num_items),
        item_count(num_items) {}
  void reset();
};

struct ReputationVector {
  std::vector<double> scores;
  double alpha = 1.0;
  double beta = 1.0;
};

// Sparse per-pair weights for one epoch; pairs absent from the table weigh 1.
class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(std::vector<std::pair<std::uint64_t, double>> sorted_entries)
      : entries_(std::move(sorted_entries)) {}

  double lookup(std::uint32_t user, std::uint32_t item) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::uint64_t, double>>& entries() const { return entries_; }

  // "user\titem\tweight" with 17-significant-digit reals.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::uint64_t, double>> entries_;  // sorted by key
};

enum class WeightStrategy { ecdf, uniform, gmm, topk, linear };

std::string to_string(WeightStrategy s);
WeightStrategy weight_strategy_from_string(const std::string& name);

struct WeightStrategyConfig {
  WeightStrategy strategy = WeightStrategy::ecdf;
  double remember_rate = 0.7;  // topk
  int gmm_components = 2;
  int gmm_max_iters = 100;
  double gmm_tol = 1e-6;
};

// Ablation switches for the three weight components. Entity factors only
// apply on top of an active base weight at the CLI layer; the fuse kernel
// itself honors any combination.
struct ComponentToggles {
  bool base_weight = true;
  bool item_factor = true;
  bool user_factor = true;
};

// Add each record into the per-entity sums and counts.
void accumulate(EntityLossStats& stats, const LossRecordSet& records);

// sum / count per entity; entities with count 0 are absent.
std::pair<std::vector<std::optional<double>>, std::vector<std::optional<double>>> mean_entity_loss(
    const EntityLossStats& stats);

// Rank-based linear map of average losses into [alpha, beta]: the
// lowest-loss present entity scores beta, the highest alpha; ties break by
// ascending entity index. Absent entities and a single present entity score
// the midpoint.
ReputationVector rank_map(const std::vector<std::optional<double>>& avg_losses, double alpha,
                          double beta);

// Hazen-position ECDF of the negated losses: weight = (rank - 0.5) / n with
// right-side ranks (ties share a rank). Lowest loss maps nearest 1.
std::vector<double> ecdf_base_weights(const LossRecordSet& records, int workers = 1);

std::vector<double> uniform_base_weights(const LossRecordSet& records);

// Keep the remember_rate share of lowest-loss records (weight 1), drop the
// floor((1-rho)*n) highest-loss ones (weight 0); threshold ties keep earlier
// records.
std::vector<double> topk_base_weights(const LossRecordSet& records, double remember_rate);

// Min-max scale the negated losses into [0, 1]; degenerate inputs weigh 1.
std::vector<double> linear_base_weights(const LossRecordSet& records);

struct GmmWeights {
  std::vector<double> weights;
  bool converged = true;
  int iterations = 0;
};

// Two-component 1-D Gaussian mixture fit by EM on the negated losses; the
// clean component is the one with the larger mean and each weight is its
// posterior. Non-convergence returns the last iterate with converged=false.
GmmWeights gmm_base_weights(const LossRecordSet& records, const WeightStrategyConfig& cfg);

std::vector<double> base_weights(const LossRecordSet& records, const WeightStrategyConfig& cfg,
                                 int workers = 1);

// weight(u, i) = base * w_u[u] * w_i[i], with disabled factors replaced by 1.
// Repeated (u, i) records collapse to one entry; the last record wins.
WeightTable fuse(const std::vector<double>& base, const ReputationVector& user_rep,
                 const ReputationVector& item_rep, const LossRecordSet& records,
                 const ComponentToggles& toggles = {});

}  // namespace cdn
