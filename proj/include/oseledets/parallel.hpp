#pragma once

// Deterministic work distribution: every task writes only its own
// index-addressed slot, and all reductions happen after the join in index
// order, so results are byte-identical for any worker count.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace oseledets {

inline int worker_count() {
  if (const char* s = std::getenv("OSELEDETS_WORKERS")) {
    try {
      const int n = std::stoi(s);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("OSELEDETS_WORKERS must be a positive integer, got '" +
                             std::string(s) + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

template <class F>
void parallel_for(int n, F&& fn, int workers = -1) {
  if (workers < 0) workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int nt = std::min(workers, n);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace oseledets
