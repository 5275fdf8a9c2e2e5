// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace aerosplat {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Static round-robin partition: worker w handles items w, w + T, w + 2T, ...
// The assignment of items to workers depends only on the thread count, so
// per-worker accumulators reduced in worker order are deterministic.
template <typename Fn>
void parallel_for_workers(std::size_t count, int threads, Fn&& fn) {
  const int workers =
      static_cast<int>(std::min<std::size_t>(resolve_thread_count(threads),
                                             std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(0, i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(w, i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline int worker_count(std::size_t count, int threads) {
  return static_cast<int>(std::min<std::size_t>(resolve_thread_count(threads),
                                                std::max<std::size_t>(count, 1)));
}

}  // namespace aerosplat
