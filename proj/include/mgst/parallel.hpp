#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mgst {

// Runs fn(begin, end) over [0, count) split into contiguous chunks, one per
// worker. Chunks are disjoint, so callers writing to disjoint output slots
// get identical results for any worker count.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t nw = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  if (nw > count) nw = count;
  if (nw == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::size_t chunk = (count + nw - 1) / nw;
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace mgst
