#include "statenet/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace statenet {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n > 0 ? n : 0); }

int max_threads() {
  int n = g_max_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn,
                  int threads) {
  if (end <= begin) return;
  size_t n = end - begin;
  int t = threads > 0 ? threads : max_threads();
  if (t > static_cast<int>(n)) t = static_cast<int>(n);
  if (t <= 1) {
    for (size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(t));
  size_t chunk = (n + static_cast<size_t>(t) - 1) / static_cast<size_t>(t);
  for (int w = 0; w < t; ++w) {
    size_t lo = begin + static_cast<size_t>(w) * chunk;
    size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace statenet
