#include "commlink/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace commlink {

int worker_count() {
  const int cores = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("COMMLINK_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return std::min(n, cores);
    } catch (const std::exception&) {
      // Ignore malformed values.
    }
  }
  return cores;
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  parallel_for(count, static_cast<std::size_t>(worker_count()), fn);
}

void parallel_for(std::size_t count, std::size_t maxWorkers,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(count, std::max<std::size_t>(1, maxWorkers));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace commlink
