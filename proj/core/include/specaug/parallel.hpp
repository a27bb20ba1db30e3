#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specaug {

/// Splits [0, count) into at most `threads` contiguous blocks and runs
/// `body(begin, end)` on each. The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename Body>
void parallel_for_blocks(std::size_t count, std::size_t threads, Body&& body) {
  if (count == 0) return;
  threads = std::clamp<std::size_t>(threads, 1, count);
  if (threads == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t chunk = count / threads;
    const std::size_t extra = count % threads;
    std::size_t begin = 0;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t end = begin + chunk + (t < extra ? 1 : 0);
      workers.emplace_back([&, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
      begin = end;
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Runs `body(i)` for every i in [0, count) on a pool of `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  parallel_for_blocks(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace specaug
