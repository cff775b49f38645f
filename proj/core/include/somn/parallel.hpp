#pragma once

#include <functional>

namespace somn {

// Global worker budget for data-parallel loops. 0 selects the hardware
// concurrency. Results never depend on the thread count: callers accumulate
// into per-item buffers and reduce in index order.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n) across up to max_threads() workers with a static
// contiguous partition. Exceptions propagate to the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace somn
