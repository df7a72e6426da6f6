#include "attribens/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace attribens {
namespace {

std::atomic<unsigned> g_thread_override{0};

unsigned env_threads() {
  const char* v = std::getenv("ATTRIBENS_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (end == v || n < 1) return 0;
  return static_cast<unsigned>(n);
}

}  // namespace

unsigned effective_threads() {
  unsigned n = g_thread_override.load(std::memory_order_relaxed);
  if (n == 0) n = env_threads();
  if (n == 0) n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

void set_thread_count(unsigned n) {
  g_thread_override.store(n, std::memory_order_relaxed);
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body, unsigned threads) {
  if (begin >= end) return;
  const std::size_t count = end - begin;
  unsigned workers = threads ? threads : effective_threads();
  if (workers > count) workers = static_cast<unsigned>(count);

  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }

  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = begin + chunk * w;
    const std::size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace attribens
