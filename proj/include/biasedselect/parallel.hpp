#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace biasedselect {

// Worker count: BIASEDSELECT_THREADS when set, else the hardware count.
// Callers must keep results deterministic regardless of this value (write
// into per-index slots, reduce sequentially).
inline int thread_count() {
  if (const char* env = std::getenv("BIASEDSELECT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static chunking of [begin, end) over the workers; fn(i) must only touch
// state owned by index i.
template <typename F>
void parallel_for(int begin, int end, int threads, F&& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  if (threads <= 0) threads = thread_count();
  threads = std::min(threads, count);
  if (threads == 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::atomic_flag error_claimed = ATOMIC_FLAG_INIT;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const int chunk_begin = begin + static_cast<int>(static_cast<long long>(count) * t / threads);
    const int chunk_end = begin + static_cast<int>(static_cast<long long>(count) * (t + 1) / threads);
    pool.emplace_back([chunk_begin, chunk_end, &fn, &first_error, &error_claimed] {
      try {
        for (int i = chunk_begin; i < chunk_end; ++i) fn(i);
      } catch (...) {
        if (!error_claimed.test_and_set()) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace biasedselect
