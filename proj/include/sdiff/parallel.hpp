#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdiff {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Calls fn(begin, end) on contiguous chunks of [0, n). Chunk boundaries
/// depend only on n, so per-index outputs are independent of `workers`.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  constexpr std::size_t kChunk = 64;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  const std::size_t w = std::clamp<std::size_t>(workers <= 0 ? 1 : workers, 1,
                                                std::max<std::size_t>(n_chunks, 1));
  if (w <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      fn(c * kChunk, std::min(n, (c + 1) * kChunk));
    }
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t c = t; c < n_chunks; c += w) {
          fn(c * kChunk, std::min(n, (c + 1) * kChunk));
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace sdiff
