#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

// Parallel loop over independent work items (replications).  Items are
// dealt to workers in static round-robin order and every item writes only
// to its own pre-allocated slot, so the result is identical for any worker
// count.  The first exception (by item index) is rethrown on the caller.

namespace gmfc {

inline void parallel_for(int count, int workers,
                         const std::function<void(int)>& body) {
  if (workers < 1) workers = 1;
  if (workers == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  if (workers > count) workers = count;
  std::vector<std::exception_ptr> errs(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < count; ++i)
    if (errs[i]) std::rethrow_exception(errs[i]);
}

}  // namespace gmfc
