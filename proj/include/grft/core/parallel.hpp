#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace grft {

/// Runs fn(worker, item) for item in [0, n) on `workers` threads. Item i goes to worker
/// i % workers, so the assignment (and any per-worker stream) is independent of timing.
/// The first exception thrown by any worker is rethrown after all threads join.
inline void parallel_for(std::size_t n, int workers, const std::function<void(int, std::size_t)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(workers)) fn(w, i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace grft
