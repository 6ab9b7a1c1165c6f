#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cdrflow::parallel {

namespace detail {
inline std::atomic<int> thread_count{1};
inline std::atomic<std::ptrdiff_t> block_rows{64};
}  // namespace detail

// Worker cap for row-parallel operator application. Results never depend on it.
inline void set_num_threads(int n) { detail::thread_count = std::max(1, n); }
inline int num_threads() { return detail::thread_count; }

// Rows per work item. Block boundaries are fixed by this value alone, so the
// floating-point result of a blocked product is the same for any thread count.
inline void set_block_rows(std::ptrdiff_t n) { detail::block_rows = std::max<std::ptrdiff_t>(1, n); }
inline std::ptrdiff_t block_rows() { return detail::block_rows; }

// Calls fn(begin, end) for every block [begin, end) of [0, rows).
template <class Fn>
void for_each_row_block(std::ptrdiff_t rows, Fn&& fn) {
  const std::ptrdiff_t bs = block_rows();
  const std::ptrdiff_t n_blocks = (rows + bs - 1) / bs;
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(num_threads(), n_blocks));
  auto run_block = [&](std::ptrdiff_t b) {
    const std::ptrdiff_t begin = b * bs;
    fn(begin, std::min(rows, begin + bs));
  };
  if (workers <= 1) {
    for (std::ptrdiff_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::ptrdiff_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::ptrdiff_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_blocks;
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cdrflow::parallel
