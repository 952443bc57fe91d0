#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cdn {

// Worker count resolution: requested > 0 wins, then CROSSDENOISE_WORKERS,
// then the hardware default.
int resolve_workers(int requested);

// Parallel kernels in this project follow one rule: every result is written
// to a slot owned by a single index, and every reduction runs over fixed
// chunk boundaries merged in chunk order. Outputs are therefore bit-identical
// for any worker count, including 1 (the serial reference path).
template <class F>
void parallel_for(std::int64_t n, int workers, F&& fn) {
#ifdef _OPENMP
  if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#else
  (void)workers;
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

// [begin, end) ranges covering [0, n) with at most `target` elements each.
inline std::vector<std::pair<std::int64_t, std::int64_t>> make_chunks(std::int64_t n,
                                                                      std::int64_t target) {
  std::vector<std::pair<std::int64_t, std::int64_t>> chunks;
  if (target < 1) target = 1;
  for (std::int64_t b = 0; b < n; b += target) chunks.emplace_back(b, std::min(n, b + target));
  return chunks;
}

}  // namespace cdn
