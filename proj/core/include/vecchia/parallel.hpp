#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vecchia {

/// Worker count used when a caller passes threads <= 0. Reads
/// VECCHIA_THREADS, falling back to std::thread::hardware_concurrency().
int default_thread_count();

/// Runs body(worker, begin, end) over [0, count) split into chunks of
/// `grain` items, dynamically scheduled across up to `threads` workers.
/// `worker` is in [0, threads) and lets callers keep per-worker scratch space.
/// The first exception thrown by any chunk is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, int threads, std::size_t grain, Body&& body) {
  if (count == 0) return;
  if (threads <= 0) threads = default_thread_count();
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = (count + grain - 1) / grain;
  const int workers = static_cast<int>(std::min<std::size_t>(chunks, static_cast<std::size_t>(threads)));
  if (workers <= 1) {
    body(0, std::size_t{0}, count);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&](int worker) {
    for (;;) {
      const std::size_t chunk = next.fetch_add(1);
      if (chunk >= chunks) return;
      const std::size_t begin = chunk * grain;
      const std::size_t end = std::min(count, begin + grain);
      try {
        body(worker, begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vecchia
