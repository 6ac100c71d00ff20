#include "pscore/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pscore {

std::size_t thread_cap() {
  static const std::size_t cap = [] {
    const char* env = std::getenv("PSCORE_THREADS");
    if (env == nullptr || *env == '\0') return std::size_t{1};
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    if (end == env || value < 1) return std::size_t{1};
    return std::min<std::size_t>(static_cast<std::size_t>(value), 256);
  }();
  return cap;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (begin >= end) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    fn(begin, end);
    return;
  }

  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const std::size_t chunk = n / workers;
  const std::size_t extra = n % workers;
  std::size_t lo = begin;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t hi = lo + chunk + (w < extra ? 1 : 0);
    threads.emplace_back([&, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    lo = hi;
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pscore
