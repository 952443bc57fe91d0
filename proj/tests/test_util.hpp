#pragma once

// Test-side oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "crossdenoise/backbones.hpp"
#include "crossdenoise/rng.hpp"
#include "crossdenoise/weighting.hpp"

namespace oracle {

// O(n^2) rank counting straight from the ECDF definition: the rank of a
// record is the number of records whose negated loss is <= its own.
inline std::vector<double> ecdf_counting(const cdn::LossRecordSet& records) {
  std::size_t n = records.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t rank = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (-records[k].loss <= -records[j].loss) ++rank;
    w[j] = (static_cast<double>(rank) - 0.5) / static_cast<double>(n);
  }
  return w;
}

// O(n^2) top-k oracle: a record is kept iff fewer than keep_count records
// precede it in the (loss asc, record order) ordering.
inline std::vector<double> topk_counting(const cdn::LossRecordSet& records, double rho) {
  std::size_t n = records.size();
  std::vector<double> w(n, 1.0);
  if (n == 0) return w;
  auto discard = static_cast<std::size_t>(std::floor((1.0 - rho) * double(n)));
  if (discard == 0) return w;
  std::size_t keep = n - discard;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t before = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (records[k].loss < records[j].loss) ++before;
      else if (records[k].loss == records[j].loss && k < j) ++before;
    }
    if (before >= keep) w[j] = 0.0;
  }
  return w;
}

// linear scaling as the negate-then-min-max recipe
inline std::vector<double> linear_minmax(const cdn::LossRecordSet& records) {
  std::size_t n = records.size();
  std::vector<double> w(n, 1.0);
  if (n <= 1) return w;
  std::vector<double> neg(n);
  for (std::size_t j = 0; j < n; ++j) neg[j] = -records[j].loss;
  double lo = *std::min_element(neg.begin(), neg.end());
  double hi = *std::max_element(neg.begin(), neg.end());
  if (lo == hi) return w;
  for (std::size_t j = 0; j < n; ++j) w[j] = (neg[j] - lo) / (hi - lo);
  return w;
}

// full-sort ranking with the (score desc, item asc) tie rule
inline std::vector<std::uint32_t> rank_full_sort(const std::vector<double>& scores,
                                                 const std::vector<std::uint32_t>& candidates,
                                                 int k) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::size_t top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
  std::vector<std::uint32_t> out(top);
  for (std::size_t p = 0; p < top; ++p) out[p] = candidates[order[p]];
  return out;
}

inline double recall_direct(const std::vector<std::uint32_t>& ranked,
                            const std::unordered_set<std::uint32_t>& relevant, int k) {
  int hits = 0;
  for (std::size_t p = 0; p < ranked.size() && p < static_cast<std::size_t>(k); ++p)
    if (relevant.count(ranked[p])) ++hits;
  return double(hits) / double(relevant.size());
}

inline double ndcg_direct(const std::vector<std::uint32_t>& ranked,
                          const std::unordered_set<std::uint32_t>& relevant, int k) {
  double dcg = 0.0;
  for (std::size_t p = 0; p < ranked.size() && p < static_cast<std::size_t>(k); ++p)
    if (relevant.count(ranked[p])) dcg += 1.0 / std::log2(double(p) + 2.0);
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min<std::size_t>(relevant.size(), k); ++p)
    idcg += 1.0 / std::log2(double(p) + 2.0);
  return dcg / idcg;
}

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst_tensor;
};

// central finite differences of the weighted batch loss against the analytic
// gradients, h = 1e-5; relative error uses max(1, |a|, |fd|)
inline GradCheck finite_difference_check(cdn::Backbone& model,
                                         std::span<const cdn::TrainSample> batch,
                                         std::span<const double> weights,
                                         const cdn::EpochContext& ctx, double h = 1e-5) {
  cdn::GradBuffers grads = cdn::make_grad_buffers(model);
  model.train_batch(batch, weights, &grads, ctx, 1, cdn::kGradChunk);

  GradCheck result;
  auto tensors = model.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& data = *tensors[t].data;
    for (std::size_t j = 0; j < data.size(); ++j) {
      double keep = data[j];
      data[j] = keep + h;
      double up = model.train_batch(batch, weights, nullptr, ctx, 1, cdn::kGradChunk).weighted_mean;
      data[j] = keep - h;
      double dn = model.train_batch(batch, weights, nullptr, ctx, 1, cdn::kGradChunk).weighted_mean;
      data[j] = keep;
      double fd = (up - dn) / (2.0 * h);
      double a = grads[t][j];
      double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_tensor = tensors[t].name;
      }
    }
  }
  return result;
}

inline cdn::LossRecordSet random_records(std::size_t n, std::uint32_t users, std::uint32_t items,
                                         cdn::Rng& rng, bool with_ties) {
  cdn::LossRecordSet records(n);
  for (auto& r : records) {
    r.user = static_cast<std::uint32_t>(rng.below(users));
    r.item = static_cast<std::uint32_t>(rng.below(items));
    if (with_ties) {
      // quantized losses make exact collisions common
      r.loss = static_cast<double>(rng.below(12)) * 0.25;
    } else {
      r.loss = rng.uniform(0.0, 4.0);
    }
  }
  return records;
}

}  // namespace oracle
