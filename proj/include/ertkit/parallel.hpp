#ifndef ERTKIT_PARALLEL_HPP
#define ERTKIT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace ertkit {

// Number of worker threads: min(hardware_concurrency, ERTKIT_THREADS if set).
int thread_budget();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks per
// worker; fn must write only to per-index state so the result is identical
// for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ertkit

#endif
