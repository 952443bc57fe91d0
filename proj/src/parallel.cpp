#include "crossdenoise/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace cdn {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CROSSDENOISE_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
#endif
}

}  // namespace cdn
