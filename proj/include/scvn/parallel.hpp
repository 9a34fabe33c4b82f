#ifndef SCVN_PARALLEL_HPP
#define SCVN_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace scvn {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, count). Work items must be independent; results
// should be written to index-addressed slots so the outcome does not depend
// on scheduling. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  int n = threads < static_cast<int>(count) ? threads : static_cast<int>(count);
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(error);
}

}  // namespace scvn

#endif  // SCVN_PARALLEL_HPP
