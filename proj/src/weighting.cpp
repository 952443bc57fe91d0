#include "crossdenoise/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "crossdenoise/common.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/parallel.hpp"

namespace cdn {

void EntityLossStats::reset() {
  std::fill(user_loss_sum.begin(), user_loss_sum.end(), 0.0);
  std::fill(user_count.begin(), user_count.end(), 0);
  std::fill(item_loss_sum.begin(), item_loss_sum.end(), 0.0);
  std::fill(item_count.begin(), item_count.end(), 0);
}

double WeightTable::lookup(std::uint32_t user, std::uint32_t item) const {
  std::uint64_t key = pair_key(user, item);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const auto& e, std::uint64_t k) { return e.first < k; });
  if (it != entries_.end() && it->first == key) return it->second;
  return 1.0;  // pairs outside the table train at full weight
}

std::string WeightTable::serialize() const {
  std::string out;
  for (const auto& [key, w] : entries_) {
    out += std::to_string(static_cast<std::uint32_t>(key >> 32));
    out += '\t';
    out += std::to_string(static_cast<std::uint32_t>(key));
    out += '\t';
    out += fmt_full(w);
    out += '\n';
  }
  return out;
}

void WeightTable::save(const std::filesystem::path& path) const {
  write_text_file(path, serialize());
}

std::string to_string(WeightStrategy s) {
  switch (s) {
    case WeightStrategy::ecdf: return "ecdf";
    case WeightStrategy::uniform: return "uniform";
    case WeightStrategy::gmm: return "gmm";
    case WeightStrategy::topk: return "topk";
    case WeightStrategy::linear: return "linear";
  }
  return "ecdf";
}

WeightStrategy weight_strategy_from_string(const std::string& name) {
  if (name == "ecdf") return WeightStrategy::ecdf;
  if (name == "uniform") return WeightStrategy::uniform;
  if (name == "gmm") return WeightStrategy::gmm;
  if (name == "topk") return WeightStrategy::topk;
  if (name == "linear") return WeightStrategy::linear;
  throw ContractError("unknown weighting strategy: " + name);
}

void accumulate(EntityLossStats& stats, const LossRecordSet& records) {
  for (const auto& r : records) {
    check(r.user < stats.user_count.size() && r.item < stats.item_count.size(),
          "accumulate: entity index out of range");
    check(r.loss >= 0.0, "accumulate: negative loss");
    stats.user_loss_sum[r.user] += r.loss;
    stats.user_count[r.user] += 1;
    stats.item_loss_sum[r.item] += r.loss;
    stats.item_count[r.item] += 1;
  }
}

std::pair<std::vector<std::optional<double>>, std::vector<std::optional<double>>> mean_entity_loss(
    const EntityLossStats& stats) {
  auto averages = [](const std::vector<double>& sums, const std::vector<std::int64_t>& counts) {
    std::vector<std::optional<double>> out(sums.size());
    for (std::size_t e = 0; e < sums.size(); ++e)
      if (counts[e] > 0) out[e] = sums[e] / static_cast<double>(counts[e]);
    return out;
  };
  return {averages(stats.user_loss_sum, stats.user_count),
          averages(stats.item_loss_sum, stats.item_count)};
}

ReputationVector rank_map(const std::vector<std::optional<double>>& avg_losses, double alpha,
                          double beta) {
  check(alpha >= 0.0 && alpha <= beta, "rank_map: need 0 <= alpha <= beta");
  ReputationVector rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.scores.assign(avg_losses.size(), 0.5 * (alpha + beta));

  std::vector<std::size_t> present;
  present.reserve(avg_losses.size());
  for (std::size_t e = 0; e < avg_losses.size(); ++e)
    if (avg_losses[e]) present.push_back(e);
  std::size_t k = present.size();
  if (k < 2) return rep;  // absent entities and the lone-entity case keep the midpoint

  std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
    if (*avg_losses[a] != *avg_losses[b]) return *avg_losses[a] < *avg_losses[b];
    return a < b;
  });
  for (std::size_t r = 1; r <= k; ++r) {
    std::size_t e = present[r - 1];
    double score;
    if (r == 1) score = beta;          // most reliable: lowest average loss
    else if (r == k) score = alpha;    // least reliable
    else
      score = alpha + (beta - alpha) * static_cast<double>(k - r) / static_cast<double>(k - 1);
    rep.scores[e] = std::clamp(score, alpha, beta);
  }
  return rep;
}

namespace {

using NegEntry = std::pair<double, std::uint32_t>;  // (negated loss, record index)

// Total order (value, index): any sorting algorithm yields the same sequence.
bool neg_entry_less(const NegEntry& a, const NegEntry& b) {
  if (a.first != b.first) return a.first < b.first;
  return a.second < b.second;
}

// Deterministic parallel sort: fixed blocks sorted concurrently, then merged
// pairwise. The comparator is a total order, so the result never depends on
// the worker count.
void sort_neg_entries(std::vector<NegEntry>& v, int workers) {
  if (workers <= 1 || v.size() < 1u << 14) {
    std::sort(v.begin(), v.end(), neg_entry_less);
    return;
  }
  int blocks = std::min(workers, 8);
  std::size_t n = v.size();
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (int b = 0; b < blocks; ++b)
    spans.emplace_back(n * b / blocks, n * (b + 1) / blocks);
  parallel_for(static_cast<std::int64_t>(spans.size()), workers, [&](std::int64_t b) {
    auto [lo, hi] = spans[static_cast<std::size_t>(b)];
    std::sort(v.begin() + lo, v.begin() + hi, neg_entry_less);
  });
  while (spans.size() > 1) {
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (std::size_t b = 0; b + 1 < spans.size(); b += 2) {
      std::inplace_merge(v.begin() + spans[b].first, v.begin() + spans[b].second,
                         v.begin() + spans[b + 1].second, neg_entry_less);
      merged.emplace_back(spans[b].first, spans[b + 1].second);
    }
    if (spans.size() % 2 == 1) merged.push_back(spans.back());
    spans = std::move(merged);
  }
}

}  // namespace

std::vector<double> ecdf_base_weights(const LossRecordSet& records, int workers) {
  std::size_t n = records.size();
  std::vector<double> weights(n);
  if (n == 0) return weights;

  std::vector<NegEntry> order(n);
  for (std::size_t j = 0; j < n; ++j)
    order[j] = {-records[j].loss, static_cast<std::uint32_t>(j)};
  sort_neg_entries(order, workers);

  // right-side ranks by run: every member of a tie run counts all entries at
  // or below its value
  std::size_t run_begin = 0;
  while (run_begin < n) {
    std::size_t run_end = run_begin + 1;
    while (run_end < n && order[run_end].first == order[run_begin].first) ++run_end;
    double w = (static_cast<double>(run_end) - 0.5) / static_cast<double>(n);
    for (std::size_t k = run_begin; k < run_end; ++k) weights[order[k].second] = w;
    run_begin = run_end;
  }
  return weights;
}

std::vector<double> uniform_base_weights(const LossRecordSet& records) {
  return std::vector<double>(records.size(), 1.0);
}

std::vector<double> topk_base_weights(const LossRecordSet& records, double remember_rate) {
  check(remember_rate > 0.0 && remember_rate <= 1.0, "topk: remember rate in (0, 1]");
  std::size_t n = records.size();
  std::vector<double> weights(n, 1.0);
  if (n == 0) return weights;
  auto discard = static_cast<std::size_t>(std::floor((1.0 - remember_rate) * double(n)));
  if (discard == 0) return weights;

  // stable order by ascending loss: ties at the threshold keep earlier records
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].loss < records[b].loss; });
  for (std::size_t r = n - discard; r < n; ++r) weights[order[r]] = 0.0;
  return weights;
}

std::vector<double> linear_base_weights(const LossRecordSet& records) {
  std::size_t n = records.size();
  std::vector<double> weights(n, 1.0);
  if (n <= 1) return weights;
  double lo = records[0].loss, hi = records[0].loss;
  for (const auto& r : records) {
    lo = std::min(lo, r.loss);
    hi = std::max(hi, r.loss);
  }
  if (lo == hi) return weights;
  // min-max on the negated losses: lowest loss -> 1, highest -> 0
  double span = hi - lo;
  for (std::size_t j = 0; j < n; ++j) weights[j] = (hi - records[j].loss) / span;
  return weights;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double log_normal_pdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

}  // namespace

GmmWeights gmm_base_weights(const LossRecordSet& records, const WeightStrategyConfig& cfg) {
  GmmWeights out;
  std::size_t n = records.size();
  out.weights.assign(n, 1.0);
  if (n <= 1) return out;

  constexpr double kVarFloor = 1e-6;
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = -records[j].loss;

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double mu[2] = {quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.75)};
  double mean_all = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  double var_all = 0.0;
  for (double v : x) var_all += (v - mean_all) * (v - mean_all);
  var_all = std::max(kVarFloor, var_all / double(n));
  double var[2] = {var_all, var_all};
  double pi[2] = {0.5, 0.5};

  std::vector<double> resp(n);  // responsibility of component 1
  double prev_ll = -std::numeric_limits<double>::infinity();
  out.converged = false;
  for (int iter = 0; iter < cfg.gmm_max_iters; ++iter) {
    out.iterations = iter + 1;
    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double l0 = std::log(pi[0]) + log_normal_pdf(x[j], mu[0], var[0]);
      double l1 = std::log(pi[1]) + log_normal_pdf(x[j], mu[1], var[1]);
      double mx = std::max(l0, l1);
      double z = std::exp(l0 - mx) + std::exp(l1 - mx);
      resp[j] = std::exp(l1 - mx) / z;
      ll += mx + std::log(z);
    }
    double n1 = std::accumulate(resp.begin(), resp.end(), 0.0);
    double n0 = double(n) - n1;
    n0 = std::max(n0, 1e-12);
    n1 = std::max(n1, 1e-12);
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s0 += (1.0 - resp[j]) * x[j];
      s1 += resp[j] * x[j];
    }
    mu[0] = s0 / n0;
    mu[1] = s1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      v0 += (1.0 - resp[j]) * (x[j] - mu[0]) * (x[j] - mu[0]);
      v1 += resp[j] * (x[j] - mu[1]) * (x[j] - mu[1]);
    }
    var[0] = std::max(kVarFloor, v0 / n0);
    var[1] = std::max(kVarFloor, v1 / n1);
    pi[0] = n0 / double(n);
    pi[1] = n1 / double(n);

    if (std::abs(ll - prev_ll) < cfg.gmm_tol) {
      out.converged = true;
      break;
    }
    prev_ll = ll;
  }

  // the component with the larger mean on the negated axis is the clean one
  int clean = mu[1] >= mu[0] ? 1 : 0;
  for (std::size_t j = 0; j < n; ++j) {
    double l0 = std::log(pi[0]) + log_normal_pdf(x[j], mu[0], var[0]);
    double l1 = std::log(pi[1]) + log_normal_pdf(x[j], mu[1], var[1]);
    double mx = std::max(l0, l1);
    double z = std::exp(l0 - mx) + std::exp(l1 - mx);
    double p1 = std::exp(l1 - mx) / z;
    out.weights[j] = clean == 1 ? p1 : 1.0 - p1;
  }
  return out;
}

std::vector<double> base_weights(const LossRecordSet& records, const WeightStrategyConfig& cfg,
                                 int workers) {
  switch (cfg.strategy) {
    case WeightStrategy::ecdf: return ecdf_base_weights(records, workers);
    case WeightStrategy::uniform: return uniform_base_weights(records);
    case WeightStrategy::gmm: return gmm_base_weights(records, cfg).weights;
    case WeightStrategy::topk: return topk_base_weights(records, cfg.remember_rate);
    case WeightStrategy::linear: return linear_base_weights(records);
  }
  return uniform_base_weights(records);
}

WeightTable fuse(const std::vector<double>& base, const ReputationVector& user_rep,
                 const ReputationVector& item_rep, const LossRecordSet& records,
                 const ComponentToggles& toggles) {
  check(base.size() == records.size(), "fuse: base weights misaligned with records");
  std::vector<std::pair<std::uint64_t, double>> entries(records.size());
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto& r = records[j];
    check(r.user < user_rep.scores.size(), "fuse: missing user reputation entry");
    check(r.item < item_rep.scores.size(), "fuse: missing item reputation entry");
    double b = toggles.base_weight ? base[j] : 1.0;
    double wu = toggles.user_factor ? user_rep.scores[r.user] : 1.0;
    double wi = toggles.item_factor ? item_rep.scores[r.item] : 1.0;
    entries[j] = {pair_key(r.user, r.item), b * wu * wi};
  }
  // stable sort keeps record order within a pair; the last occurrence wins
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t w = 0;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    if (j + 1 < entries.size() && entries[j + 1].first == entries[j].first) continue;
    entries[w++] = entries[j];
  }
  entries.resize(w);
  return WeightTable(std::move(entries));
}

}  // namespace cdn
