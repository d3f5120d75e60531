// Deterministic static-partition parallel loop. Worker count is capped by the
// ASJ_THREADS environment variable (0 or unset = hardware concurrency); every
// iteration writes only to state owned by its own index, so results do not
// depend on the thread count.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace asj {

inline int thread_budget() {
  static const int cached = [] {
    if (const char* env = std::getenv("ASJ_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<int>(std::min<long>(v, 256));
    }
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    return hw > 0 ? hw : 1;
  }();
  return cached;
}

template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int jobs = end - begin;
  if (jobs <= 0) return;
  const int workers = std::min(thread_budget(), jobs);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([begin, end, w, workers, &fn] {
      for (int i = begin + w; i < end; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace asj
