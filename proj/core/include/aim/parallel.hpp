#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace aim {

// Splits [begin, end) into contiguous chunks, one per hardware thread. Chunks
// write disjoint output ranges, so results do not depend on the thread count.
inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  std::size_t n = end > begin ? end - begin : 0;
  unsigned workers = std::thread::hardware_concurrency();
  if (workers <= 1 || n < 4096) {
    body(begin, end);
    return;
  }
  workers = std::min<std::size_t>(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = begin + w * chunk;
    if (lo >= end) break;
    std::size_t hi = std::min(end, lo + chunk);
    threads.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace aim
