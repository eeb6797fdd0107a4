#include "chronosurv/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chronosurv {

int thread_budget() {
  static const int budget = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    const char* env = std::getenv("CHRONOSURV_THREADS");
    if (env != nullptr) {
      const int requested = std::atoi(env);
      if (requested >= 1) return requested < hw ? requested : hw;
    }
    return hw;
  }();
  return budget;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int budget = thread_budget();
  if (n == 0) return;
  if (budget <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);  // stop handing out work
        return;
      }
    }
  };
  const std::size_t n_threads = static_cast<std::size_t>(budget) < n ? static_cast<std::size_t>(budget) : n;
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace chronosurv
