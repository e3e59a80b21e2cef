#include "phase2vec/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace p2v {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
  int n = g_threads.load();
  if (n == 0) {
    unsigned hc = std::thread::hardware_concurrency();
    n = hc == 0 ? 1 : static_cast<int>(hc);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  parallel_for_grain(n, 1, fn);
}

void parallel_for_grain(std::size_t n, std::size_t min_per_thread,
                        const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = static_cast<std::size_t>(thread_count());
  std::size_t t = std::min(workers, min_per_thread == 0 ? n : n / std::max<std::size_t>(1, min_per_thread));
  if (t <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t - 1);
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t w = 1; w < t; ++w) {
    const std::size_t b = std::min(n, w * chunk);
    const std::size_t e = std::min(n, (w + 1) * chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace p2v
