#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pdmp::detail {

/// Stream index for item k of block b; blocks keep sub-experiments apart.
inline std::uint64_t stream_index(std::uint64_t block, std::uint64_t k) { return (block << 32) | k; }

/// out[k] = f(k) for k < n, spread over `workers` threads. Each result lands
/// in its own slot, so the output never depends on scheduling.
template <class F>
auto parallel_map(std::size_t n, unsigned workers, F&& f) {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(n);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = f(k);
    return out;
  }

  std::atomic<std::size_t> next{0};
  // The failure with the smallest index wins, as in a sequential run.
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex error_lock;
  constexpr std::size_t kChunk = 256;
  auto work = [&] {
    while (true) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + kChunk);
      for (std::size_t k = begin; k < end; ++k) {
        try {
          out[k] = f(k);
        } catch (...) {
          std::lock_guard lock(error_lock);
          if (k < error_index) {
            error_index = k;
            error = std::current_exception();
          }
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace pdmp::detail
