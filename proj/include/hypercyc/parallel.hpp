#pragma once

// Minimal data-parallel helpers. Work is split into contiguous chunks whose
// results are merged in chunk order, so outputs never depend on scheduling.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace hypercyc {

// Worker count: hardware concurrency, capped by HYPERCYC_THREADS when set.
inline std::size_t thread_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HYPERCYC_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) hw = std::min(hw, static_cast<std::size_t>(v));
    } catch (...) {
      // unparsable value: keep the hardware default
    }
  }
  return hw;
}

// Calls body(chunk_index, begin, end) for a partition of [0, count) into at
// most thread_count() chunks. Returns the number of chunks used. The first
// exception thrown by any chunk is rethrown after all threads join.
template <class Body>
std::size_t parallel_chunks(std::size_t count, Body&& body, std::size_t min_chunk = 1) {
  if (count == 0) return 0;
  std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_chunk)));
  workers = std::max<std::size_t>(1, workers);
  if (workers == 1) {
    body(std::size_t{0}, std::size_t{0}, count);
    return 1;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t step = (count + workers - 1) / workers;
  std::size_t used = 0;
  for (std::size_t c = 0; c < workers; ++c) {
    const std::size_t b = c * step;
    if (b >= count) break;
    const std::size_t e = std::min(count, b + step);
    ++used;
    threads.emplace_back([&, c, b, e] {
      try {
        body(c, b, e);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return used;
}

// Maps each index to a value; result order follows the index order.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn) {
  std::vector<T> out(count);
  parallel_chunks(count, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = fn(i);
  });
  return out;
}

}  // namespace hypercyc
