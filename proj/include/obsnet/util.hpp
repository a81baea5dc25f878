#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace obsnet {

// Worker cap from OBSNET_THREADS, defaulting to the hardware concurrency.
inline unsigned env_threads() {
  if (const char* s = std::getenv("OBSNET_THREADS")) {
    const long v = std::strtol(s, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Static block partition of [0, n); results are independent of the worker
// count because each index is processed exactly once by a fixed owner.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::min<std::size_t>(env_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
};

inline Aggregate aggregate_stats(std::vector<double> xs) {
  Aggregate a;
  if (xs.empty()) return a;
  double sum = 0.0;
  for (double x : xs) sum += x;
  a.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  a.median = xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  return a;
}

inline double median_of(std::vector<double> xs) { return aggregate_stats(std::move(xs)).median; }

}  // namespace obsnet
