#pragma once

#include <cstddef>
#include <functional>

namespace commlink {

/// Number of logical cores, capped by COMMLINK_THREADS when it is set to a
/// positive integer.
int worker_count();

/// Runs fn(i) for i in [0, count) on up to worker_count() threads. The first
/// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Same with an explicit thread count.
void parallel_for(std::size_t count, std::size_t maxWorkers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace commlink
