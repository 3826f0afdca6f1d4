#pragma once

#include <cstddef>
#include <functional>

namespace bagsel {

/// Number of worker threads parallel_for uses (0 selects hardware_concurrency).
int parallel_threads();
void set_parallel_threads(int n);

/// Run fn(i) for i in [0, n). Iterations must be independent; any per-index
/// randomness has to be derived from the index so the result is identical
/// for every thread count. The first exception thrown is rethrown on the
/// calling thread after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bagsel
