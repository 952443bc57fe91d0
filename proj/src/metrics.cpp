#include "crossdenoise/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "crossdenoise/common.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/parallel.hpp"

namespace cdn {

double recall_at_k(std::span<const std::uint32_t> ranked,
                   const std::unordered_set<std::uint32_t>& relevant, int k) {
  check(!relevant.empty(), "recall_at_k: empty relevance set");
  std::size_t top = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  int hits = 0;
  for (std::size_t p = 0; p < top; ++p)
    if (relevant.contains(ranked[p])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 const std::unordered_set<std::uint32_t>& relevant, int k) {
  check(!relevant.empty(), "ndcg_at_k: empty relevance set");
  std::size_t top = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t p = 0; p < top; ++p)
    if (relevant.contains(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  std::size_t ideal = std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k));
  double idcg = 0.0;
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

std::vector<std::uint32_t> top_k_items(std::span<const double> scores,
                                       std::span<const std::uint32_t> candidates, int k,
                                       bool use_full_sort) {
  check(scores.size() == candidates.size(), "top_k_items: score/candidate mismatch");
  std::vector<std::uint32_t> order(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) order[j] = static_cast<std::uint32_t>(j);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];  // ties break by ascending item index
  };
  std::size_t top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(k, 0)));
  if (use_full_sort) {
    std::sort(order.begin(), order.end(), better);
  } else {
    std::partial_sort(order.begin(), order.begin() + top, order.end(), better);
  }
  std::vector<std::uint32_t> out(top);
  for (std::size_t p = 0; p < top; ++p) out[p] = candidates[order[p]];
  return out;
}

double MetricsReport::recall_at(int k) const {
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (ks[j] == k) return recall_mean[j];
  throw ContractError("MetricsReport: K=" + std::to_string(k) + " not evaluated");
}

double MetricsReport::ndcg_at(int k) const {
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (ks[j] == k) return ndcg_mean[j];
  throw ContractError("MetricsReport: K=" + std::to_string(k) + " not evaluated");
}

std::string MetricsReport::to_csv() const {
  std::string out = "metric,K,value\n";
  for (std::size_t j = 0; j < ks.size(); ++j)
    out += csv_row({"recall", std::to_string(ks[j]), fmt_fixed(recall_mean[j], 6)});
  for (std::size_t j = 0; j < ks.size(); ++j)
    out += csv_row({"ndcg", std::to_string(ks[j]), fmt_fixed(ndcg_mean[j], 6)});
  return out;
}

std::string MetricsReport::to_json() const {
  std::string out = "{\n  \"ks\": [";
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (j) out += ", ";
    out += std::to_string(ks[j]);
  }
  out += "],\n  \"recall_mean\": [";
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (j) out += ", ";
    out += fmt_full(recall_mean[j]);
  }
  out += "],\n  \"ndcg_mean\": [";
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (j) out += ", ";
    out += fmt_full(ndcg_mean[j]);
  }
  out += "],\n  \"users\": [\n";
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    const auto& e = per_user[u];
    out += "    {\"user\": " + std::to_string(e.user) + ", \"recall\": [";
    for (std::size_t j = 0; j < e.recall.size(); ++j) {
      if (j) out += ", ";
      out += fmt_full(e.recall[j]);
    }
    out += "], \"ndcg\": [";
    for (std::size_t j = 0; j < e.ndcg.size(); ++j) {
      if (j) out += ", ";
      out += fmt_full(e.ndcg[j]);
    }
    out += "]}";
    if (u + 1 < per_user.size()) out += ",";
    out += "\n";
  }
  out += "  ]\n}\n";
  return out;
}

RankingContext make_ranking_context(const InteractionDataset& train,
                                    const InteractionDataset& relevance,
                                    bool relevance_true_positives_only) {
  check(train.num_users == relevance.num_users && train.num_items == relevance.num_items,
        "ranking context: dimension mismatch");
  RankingContext ctx;
  ctx.num_items = train.num_items;
  ctx.train_items = items_by_user(train);
  ctx.relevant_items = items_by_user(relevance, relevance_true_positives_only);
  return ctx;
}

MetricsReport evaluate_ranking(const Backbone& model, const RankingContext& ctx,
                               std::span<const int> ks, int workers) {
  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  int k_max = 0;
  for (int k : ks) {
    check(k > 0, "evaluate_ranking: K must be positive");
    k_max = std::max(k_max, k);
  }

  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < ctx.relevant_items.size(); ++u)
    if (!ctx.relevant_items[u].empty()) users.push_back(u);

  std::vector<UserEval> evals(users.size());
  parallel_for(static_cast<std::int64_t>(users.size()), workers, [&](std::int64_t idx) {
    std::uint32_t u = users[static_cast<std::size_t>(idx)];
    const auto& seen = ctx.train_items[u];
    std::vector<std::uint32_t> candidates;
    candidates.reserve(ctx.num_items - seen.size());
    // seen is ascending: single merge pass over the catalog
    std::size_t sp = 0;
    for (std::uint32_t i = 0; i < ctx.num_items; ++i) {
      if (sp < seen.size() && seen[sp] == i) {
        ++sp;
        continue;
      }
      candidates.push_back(i);
    }
    std::vector<double> scores(candidates.size());
    model.score_items(u, candidates, seen, scores);
    auto ranked = top_k_items(scores, candidates, k_max);

    std::unordered_set<std::uint32_t> relevant(ctx.relevant_items[u].begin(),
                                               ctx.relevant_items[u].end());
    UserEval e;
    e.user = u;
    for (int k : ks) {
      e.recall.push_back(recall_at_k(ranked, relevant, k));
      e.ndcg.push_back(ndcg_at_k(ranked, relevant, k));
    }
    evals[static_cast<std::size_t>(idx)] = std::move(e);
  });

  report.per_user = std::move(evals);
  report.recall_mean.assign(ks.size(), 0.0);
  report.ndcg_mean.assign(ks.size(), 0.0);
  if (!report.per_user.empty()) {
    for (const auto& e : report.per_user)
      for (std::size_t j = 0; j < ks.size(); ++j) {
        report.recall_mean[j] += e.recall[j];
        report.ndcg_mean[j] += e.ndcg[j];
      }
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.recall_mean[j] /= static_cast<double>(report.per_user.size());
      report.ndcg_mean[j] /= static_cast<double>(report.per_user.size());
    }
  }
  return report;
}

TpFpDiagnostics tp_fp_diagnostics(const LossRecordSet& records, const WeightTable& table,
                                  const std::unordered_map<std::uint64_t, bool>& noise_flags) {
  double tp_loss = 0.0, fp_loss = 0.0, tp_w = 0.0, fp_w = 0.0;
  std::size_t n_tp = 0, n_fp = 0;
  for (const auto& r : records) {
    auto it = noise_flags.find(pair_key(r.user, r.item));
    if (it == noise_flags.end()) continue;  // sampled negative, no TP/FP label
    double w = table.lookup(r.user, r.item);
    if (it->second) {
      fp_loss += r.loss;
      fp_w += w;
      ++n_fp;
    } else {
      tp_loss += r.loss;
      tp_w += w;
      ++n_tp;
    }
  }
  TpFpDiagnostics d;
  if (n_tp > 0) {
    d.tp_loss_mean = tp_loss / static_cast<double>(n_tp);
    d.tp_weight_mean = tp_w / static_cast<double>(n_tp);
  }
  if (n_fp > 0) {
    d.fp_loss_mean = fp_loss / static_cast<double>(n_fp);
    d.fp_weight_mean = fp_w / static_cast<double>(n_fp);
  }
  return d;
}

std::unordered_map<std::uint64_t, bool> noise_flag_map(const InteractionDataset& ds) {
  std::unordered_map<std::uint64_t, bool> flags;
  flags.reserve(ds.interactions.size() * 2);
  for (const auto& x : ds.interactions) flags[pair_key(x.user, x.item)] = x.noisy;
  return flags;
}

}  // namespace cdn
