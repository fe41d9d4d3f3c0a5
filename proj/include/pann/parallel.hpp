#ifndef PANN_PARALLEL_HPP
#define PANN_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pann {

/// Runs fn(worker, job) for job in [0, n_jobs) on up to `threads` workers.
/// Jobs are claimed dynamically, so fn must not depend on which worker runs
/// a job beyond using worker-private scratch. The first exception thrown by
/// any job is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n_jobs, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n_jobs));
  if (workers == 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) fn(std::size_t{0}, j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (;;) {
          const std::size_t j = next.fetch_add(1);
          if (j >= n_jobs || failed.load()) return;
          try {
            fn(w, j);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pann

#endif  // PANN_PARALLEL_HPP
