#include "nexus/parallel.h"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nexus {

int HardwareThreads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void ParallelFor(int begin, int end, int threads, const std::function<void(int)>& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  if (threads <= 0) threads = HardwareThreads();
  threads = std::min(threads, count);

  if (threads == 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    const int chunk_begin = begin + static_cast<int>(static_cast<long long>(count) * w / threads);
    const int chunk_end = begin + static_cast<int>(static_cast<long long>(count) * (w + 1) / threads);
    workers.emplace_back([&, chunk_begin, chunk_end] {
      try {
        for (int i = chunk_begin; i < chunk_end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nexus
