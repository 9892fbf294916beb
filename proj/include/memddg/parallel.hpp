#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace memddg {

namespace detail {
inline std::atomic<unsigned> &thread_count_storage() {
  static std::atomic<unsigned> count{[] {
    if (const char *env = std::getenv("MEMDDG_THREADS")) {
      const long n = std::strtol(env, nullptr, 10);
      if (n > 0) return static_cast<unsigned>(n);
    }
    return 1u;
  }()};
  return count;
}
} // namespace detail

/// Worker count for element loops. Defaults to MEMDDG_THREADS or 1.
inline unsigned thread_count() { return detail::thread_count_storage().load(); }
inline void set_thread_count(unsigned n) {
  detail::thread_count_storage().store(std::max(1u, n));
}

/// Runs f(i) for i in [0, n) on contiguous blocks. Each index writes only its
/// own output slot, so results do not depend on the thread count.
template <class F> void parallel_for(std::size_t n, F &&f) {
  const unsigned workers = thread_count();
  if (workers <= 1 || n < 2048) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * block, end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([begin, end, w, &f, &errors] {
      try {
        for (std::size_t i = begin; i < end; ++i) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

/// Fixed-order pairwise summation.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

} // namespace memddg
