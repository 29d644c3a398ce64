#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace isoflow {

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) across at most `threads` workers. Work
/// items must not share mutable state; results should be written to
/// per-index slots.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([=]() {
      for (int i = w; i < count; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace isoflow
