// Kernel benchmark: serial reference paths vs the OpenMP-parallel production
// paths, plus the epoch-end weight-update scaling measurement.
//
//   bench_kernels [workers]
//
// Reference semantics: workers = 1 runs every kernel serially, and
// chunk_size >= n collapses the gradient reduction to plain sample-order
// accumulation. Production results are bit-identical across worker counts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "crossdenoise/backbones.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/metrics.hpp"
#include "crossdenoise/parallel.hpp"
#include "crossdenoise/rng.hpp"
#include "crossdenoise/weighting.hpp"

using namespace cdn;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

LossRecordSet random_records(std::size_t n, std::uint32_t users, std::uint32_t items,
                             std::uint64_t seed) {
  Rng rng(seed);
  LossRecordSet records(n);
  for (auto& r : records) {
    r.user = static_cast<std::uint32_t>(rng.below(users));
    r.item = static_cast<std::uint32_t>(rng.below(items));
    r.loss = rng.uniform(0.0, 3.0);
  }
  return records;
}

// full epoch-end update: stats, averages, rank maps, base weights, fusion
double weight_update_ms(const LossRecordSet& records, std::uint32_t users, std::uint32_t items,
                        int workers) {
  return best_of(5, [&] {
    EntityLossStats stats(users, items);
    accumulate(stats, records);
    auto [ua, ia] = mean_entity_loss(stats);
    ReputationVector wu = rank_map(ua, 1.0, 2.0);
    ReputationVector wi = rank_map(ia, 1.0, 2.0);
    auto base = ecdf_base_weights(records, workers);
    WeightTable table = fuse(base, wu, wi, records);
    if (table.size() == 0) std::abort();
  });
}

}  // namespace

int main(int argc, char** argv) {
  int workers = argc > 1 ? std::atoi(argv[1]) : resolve_workers(0);
  std::printf("bench with %d workers (serial reference = 1 worker)\n\n", workers);

  std::printf("== ecdf base weights (n in records) ==\n");
  std::printf("%10s %12s %12s %9s %7s\n", "n", "serial ms", "parallel ms", "speedup", "equal");
  for (std::size_t n : {std::size_t(100000), std::size_t(400000), std::size_t(1000000)}) {
    auto records = random_records(n, 2000, 3000, 7);
    std::vector<double> w_serial, w_parallel;
    double ts = best_of(3, [&] { w_serial = ecdf_base_weights(records, 1); });
    double tp = best_of(3, [&] { w_parallel = ecdf_base_weights(records, workers); });
    std::printf("%10zu %12.2f %12.2f %8.2fx %7s\n", n, ts, tp, ts / tp,
                w_serial == w_parallel ? "yes" : "NO");
  }

  std::printf("\n== gmf batch gradients (batch 2048, d 32) ==\n");
  {
    GmfModel model(4000, 4000, 32);
    Rng rng(11);
    model.init(rng);
    std::vector<TrainSample> batch(2048);
    for (auto& s : batch) {
      s.user = static_cast<std::uint32_t>(rng.below(4000));
      s.item = static_cast<std::uint32_t>(rng.below(4000));
      s.label = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    }
    std::vector<double> weights(batch.size(), 1.0);
    EpochContext ctx;
    GradBuffers g1 = make_grad_buffers(model), g2 = make_grad_buffers(model),
                g3 = make_grad_buffers(model);
    // reference: one chunk, sample-order accumulation
    double tref = best_of(5, [&] { model.train_batch(batch, weights, &g1, ctx, 1, batch.size()); });
    double ts = best_of(5, [&] { model.train_batch(batch, weights, &g2, ctx, 1, kGradChunk); });
    double tp =
        best_of(5, [&] { model.train_batch(batch, weights, &g3, ctx, workers, kGradChunk); });
    double max_diff = 0.0;
    for (std::size_t t = 0; t < g1.size(); ++t)
      for (std::size_t j = 0; j < g1[t].size(); ++j)
        max_diff = std::max(max_diff, std::abs(g1[t][j] - g3[t][j]));
    std::printf("reference (1 chunk)    %8.3f ms\n", tref);
    std::printf("chunked serial         %8.3f ms  (bitwise == chunked parallel: %s)\n", ts,
                g2 == g3 ? "yes" : "NO");
    std::printf("chunked %2d workers     %8.3f ms  speedup %.2fx, |ref - par| <= %.2e\n", workers,
                tp, ts / tp, max_diff);
  }

  std::printf("\n== full-catalog ranking (1000 users x 2000 items, gmf d 32) ==\n");
  {
    auto ds = synth_generate(1000, 2000, 8, 0.2, 5, 0.02);
    auto split = split_dataset(ds, 5);
    GmfModel model(1000, 2000, 32);
    Rng rng(13);
    model.init(rng);
    RankingContext ctx = make_ranking_context(split.train, split.test, false);
    std::vector<int> ks = {50, 100};
    MetricsReport serial, parallel;
    double ts = best_of(3, [&] { serial = evaluate_ranking(model, ctx, ks, 1); });
    double tp = best_of(3, [&] { parallel = evaluate_ranking(model, ctx, ks, workers); });
    std::printf("serial %8.2f ms | %d workers %8.2f ms | speedup %.2fx | equal %s\n", ts, workers,
                tp, ts / tp,
                serial.recall_mean == parallel.recall_mean && serial.ndcg_mean == parallel.ndcg_mean
                    ? "yes"
                    : "NO");
  }

  std::printf("\n== epoch-end weight update scaling (expected ~ n log n) ==\n");
  std::printf("%10s %12s %16s\n", "n", "ms", "log-log slope");
  {
    std::vector<double> ns = {1e4, 1e5, 1e6};
    std::vector<double> ts;
    for (double dn : ns) {
      auto n = static_cast<std::size_t>(dn);
      auto users = static_cast<std::uint32_t>(std::max<std::size_t>(2, n / 100));
      auto items = static_cast<std::uint32_t>(std::max<std::size_t>(2, n / 200));
      auto records = random_records(n, users, items, 3);
      ts.push_back(weight_update_ms(records, users, items, workers));
      std::printf("%10zu %12.3f\n", n, ts.back());
    }
    // least squares on (log n, log t)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < ns.size(); ++j) {
      double x = std::log(ns[j]), y = std::log(ts[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double m = static_cast<double>(ns.size());
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    std::printf("fitted exponent: %.3f\n", slope);
  }
  return 0;
}
