#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace remix {

// Worker count for data-parallel augmentation fan-out. Controlled by the
// REMIX_WORKERS environment variable; defaults to 1 (fully serial).
inline int worker_count() {
  const char* env = std::getenv("REMIX_WORKERS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 64);
}

// Runs fn(i) for i in [0, n). With more than one worker the index range is
// split into contiguous chunks; results must not depend on execution order
// (every slot derives its own rng, so outputs match the serial run).
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace remix
