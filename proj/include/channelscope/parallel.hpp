#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace channelscope {

inline int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("CHANNELSCOPE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) hw = std::min(hw, cap);
    } catch (...) {
      // unparsable cap: fall through to the hardware count
    }
  }
  return hw;
}

// Index-parallel loop; the body must write only to its own slot. The first
// exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for(int n, const Body& body) {
  if (n <= 0) return;
  const int workers = std::min(worker_count(), n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto drain = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace channelscope
