#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace optstop {

/// Worker count used when a config asks for 0 threads.
inline std::size_t default_thread_count() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Splits [0, trials) into `chunks` contiguous ranges, runs
/// `run_chunk(begin, end)` on each with up to `threads` workers, and folds the
/// per-chunk results in chunk order with `Summary::merge`.
template <class Summary, class ChunkFn>
Summary run_sharded(std::uint64_t trials, std::size_t chunks, std::size_t threads,
                    const ChunkFn& run_chunk, Summary total) {
  chunks = std::max<std::size_t>(1, chunks);
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, chunks);

  std::vector<Summary> partial(chunks, total);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < chunks; j = next++) {
      const std::uint64_t begin = trials * j / chunks;
      const std::uint64_t end = trials * (j + 1) / chunks;
      try {
        partial[j] = run_chunk(begin, end);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  for (const auto& part : partial) total.merge(part);
  return total;
}

}  // namespace optstop
