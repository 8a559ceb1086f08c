#pragma once

#include <cstddef>
#include <functional>

namespace statenet {

// Global cap on kernel/ingest threads. Defaults to the hardware
// concurrency. Thread count never changes numeric results: every output
// element is reduced by a single thread in a fixed order.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [begin, end) across up to `threads` workers
// (<=0 means the global cap), in contiguous chunks. fn must write only
// to locations owned by index i.
void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn,
                  int threads = 0);

}  // namespace statenet
