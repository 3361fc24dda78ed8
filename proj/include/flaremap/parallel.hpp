#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace flaremap {

/// Resolves a requested worker count; 0 means "all hardware threads".
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is handed out in
/// chunks of `grain` indices from a shared counter, so callers must make each
/// fn(i) write-disjoint; results are then independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn, std::size_t grain = 1) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), (n + grain - 1) / grain));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(grain);
        if (begin >= n) break;
        const std::size_t end = std::min(n, begin + grain);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace flaremap
