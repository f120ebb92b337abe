// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace splatslam {

int clamp_thread_count(int requested) {
  int cap = 0;
  if (const char* env = std::getenv("SPLATSLAM_THREADS")) {
    try {
      cap = std::stoi(env);
    } catch (...) {
      cap = 0;
    }
  }
  int threads = std::max(1, requested);
  if (cap > 0) threads = std::min(threads, cap);
  return threads;
}

void parallel_chunks(int n, int threads,
                     const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  threads = std::min(std::max(1, threads), n);
  const int chunk = (n + threads - 1) / threads;

  if (threads == 1) {
    fn(0, 0, n);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace splatslam
