#include "mdbgp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mdbgp::par {

namespace {

std::atomic<int> g_max_threads{0};  // 0 = unresolved, use hardware

int hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace

void set_max_threads(int t) { g_max_threads.store(t > 0 ? t : 0); }

int max_threads() {
  const int t = g_max_threads.load();
  return t > 0 ? t : hardware_threads();
}

namespace detail {

int plan_workers(std::size_t n) {
  return std::min<int>(max_threads(),
                       static_cast<int>((n + kBlock - 1) / kBlock));
}

void parallel_for_threads(
    std::size_t n, int workers,
    const std::function<void(std::size_t, std::size_t)>& body) {
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const std::size_t begin = chunk * static_cast<std::size_t>(w);
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace detail

namespace {

// Evaluate one reduction block sequentially; fold block results in index
// order.  Each block's value is a pure function of its elements, so the
// final fold is independent of which thread computed which block.
template <typename BlockFn>
double blocked_reduce(std::size_t n, BlockFn&& block_value) {
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  if (nblocks == 1) return block_value(std::size_t{0}, n);
  std::vector<double> partial(nblocks);
  parallel_for(nblocks, [&](std::size_t bb, std::size_t be) {
    for (std::size_t b = bb; b < be; ++b) {
      const std::size_t begin = b * kBlock;
      const std::size_t end = std::min(n, begin + kBlock);
      partial[b] = block_value(begin, end);
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double sum(std::span<const double> v) {
  return blocked_reduce(v.size(), [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += v[i];
    return s;
  });
}

double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_reduce(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    return s;
  });
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  return blocked_reduce(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double dlt = a[i] - b[i];
      s += dlt * dlt;
    }
    return s;
  });
}

}  // namespace mdbgp::par
