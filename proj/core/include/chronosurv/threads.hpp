#pragma once

#include <cstddef>
#include <functional>

namespace chronosurv {

// Number of worker threads for internal parallelism. Reads CHRONOSURV_THREADS
// once per process; unset or invalid means all hardware threads.
int thread_budget();

// Runs fn(i) for i in [0, n) across the thread budget. Each index must write
// only to its own slots; callers reduce results in index order afterwards so
// the outcome is identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace chronosurv
