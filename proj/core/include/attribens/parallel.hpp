#pragma once

#include <cstddef>
#include <functional>

namespace attribens {

// Worker count resolution order: explicit set_thread_count() (CLI --threads),
// ATTRIBENS_THREADS env var, hardware_concurrency. Always at least 1.
unsigned effective_threads();
void set_thread_count(unsigned n);

// Static contiguous partition of [begin, end) over worker threads. Bodies must
// write only to disjoint, index-addressed slots; reductions happen afterwards
// in index order, so results are identical for any thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace attribens
