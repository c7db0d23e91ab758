#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wvr {

namespace detail {
inline unsigned& thread_limit() {
  static unsigned limit = 0;
  return limit;
}
}  // namespace detail

/// Caps worker threads library-wide; 0 restores the hardware default.
inline void set_max_threads(unsigned n) { detail::thread_limit() = n; }

inline unsigned max_threads() {
  if (unsigned n = detail::thread_limit()) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Applies fn(lo, hi) over disjoint chunks of [0, n). Work items must write to
/// per-index slots only; the chunking then never influences the values
/// produced, so every result is independent of the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
  if (n == 0) return;
  if (threads == 0) threads = max_threads();
  const std::size_t min_chunk = 256;
  const std::size_t want =
      std::min<std::size_t>(threads, std::max<std::size_t>(1, n / min_chunk));
  if (want <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + want - 1) / want;
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace wvr
