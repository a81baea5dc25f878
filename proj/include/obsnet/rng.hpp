#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace obsnet {

// Explicit-state RNG. All sampling primitives are hand-rolled on top of the
// mt19937_64 word stream so that streams are reproducible independent of the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : gen_(splitmix(seed)), seed_base_(splitmix(seed)) {}

  // Derive an independent stream, e.g. one per protocol run.
  Rng derive(std::uint64_t stream) const {
    return Rng(seed_base_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  static Rng derived(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed);
    return r.derive(stream);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). Rejection sampling, unbiased.
  std::size_t index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  // Uniform integer in [lo, hi] inclusive.
  long long uniform_int(long long lo, long long hi) {
    return lo + static_cast<long long>(index(static_cast<std::size_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller (spare discarded for stream simplicity).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Normal(0, std) resampled until |x| <= 2*std.
  double trunc_normal(double std_dev) {
    double x = normal() * std_dev;
    while (std::abs(x) > 2.0 * std_dev) x = normal() * std_dev;
    return x;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), order randomized.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    shuffle(all);
    if (k < n) all.resize(k);
    return all;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
  std::uint64_t seed_base_ = 0;
};

}  // namespace obsnet
