#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace cdn {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Named random streams. Every source of randomness in a run is keyed by
// (root seed, stream, a, b), so toggling one component (e.g. the weighting
// strategy) never shifts the draws consumed by another.
enum class Stream : std::uint64_t {
  split = 1,
  init = 2,
  negatives = 3,
  shuffle = 4,
  corruption = 5,
  synth = 6,
};

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t st = root;
  splitmix64(st);
  st ^= static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ull;
  splitmix64(st);
  st ^= a * 0xda942042e4dd58b5ull;
  splitmix64(st);
  st ^= b * 0xca01f9dd51b143ffull;
  return splitmix64(st);
}

// mt19937_64 plus hand-rolled distributions. The engine is fully specified by
// the standard; the stdlib *distributions* are not, and reproducibility here
// means bit-identical draws regardless of standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased draw in [0, n) (Lemire's multiply-with-rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(bits()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(bits()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; uses 1 - u so the log argument stays in (0, 1].
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cdn
