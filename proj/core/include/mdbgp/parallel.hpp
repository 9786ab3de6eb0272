#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

// Thread-capped parallel loops and thread-count-invariant reductions.
//
// Reductions are computed over fixed-size blocks whose partial sums are
// combined in block order, so the result is bit-identical no matter how many
// worker threads are in use.  This property is load-bearing: solver traces
// and CLI outputs are required to be byte-reproducible across --threads
// settings.

namespace mdbgp::par {

// Fixed reduction block size (independent of the thread count).
inline constexpr std::size_t kBlock = 4096;

// Global worker cap.  t <= 0 resets to the hardware concurrency.
void set_max_threads(int t);
int max_threads();

namespace detail {

// Work below this size is not worth a thread launch.
inline constexpr std::size_t kSerialCutoff = std::size_t{1} << 15;

// Number of workers the dispatcher would use for n items (1 = stay serial).
int plan_workers(std::size_t n);

// Multi-threaded dispatch; reached only when plan_workers(n) > 1.
void parallel_for_threads(
    std::size_t n, int workers,
    const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace detail

// Invoke body(begin, end) over a disjoint cover of [0, n); chunks may run on
// different threads.  body must not touch overlapping state across chunks.
// The single-threaded path calls body directly — no type erasure — so tiny
// loops issued at high frequency pay no dispatch cost.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  if (n == 0) return;
  const int workers =
      n < detail::kSerialCutoff ? 1 : detail::plan_workers(n);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  detail::parallel_for_threads(n, workers, std::forward<Body>(body));
}

// Deterministic blocked reductions.
double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace mdbgp::par
