#pragma once

#include <cstddef>
#include <functional>

namespace semlabel {

// Worker cap from SEMLABEL_THREADS; unset, 0 or invalid means hardware
// concurrency (at least 1).
int worker_count();

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace semlabel
