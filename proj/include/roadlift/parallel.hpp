#pragma once

#include <cstddef>
#include <functional>

namespace roadlift {

// Worker count: ROADLIFT_THREADS if set to a positive integer, otherwise
// the hardware concurrency (at least 1).
unsigned worker_threads();

// Runs fn(i) for i in [0, n) across worker_threads() threads. Each index
// runs exactly once; the first exception thrown is rethrown after all
// workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace roadlift
