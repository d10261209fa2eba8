#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace hazebayes {

// Thread cap: min(HAZEBAYES_THREADS, hardware concurrency), at least 1.
inline int max_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("HAZEBAYES_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < hw) hw = cap;
  }
  return hw;
}

// Runs fn(i) for i in [0, n). Each index is handled by exactly one thread
// and must write only to its own output slots, so the result is bitwise
// independent of the thread count.
template <typename F>
void parallel_for(std::int64_t n, F&& fn) {
  const int threads = max_threads();
  if (threads <= 1 || n < 256) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::int64_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hazebayes
