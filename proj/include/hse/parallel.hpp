#pragma once

#include <cstddef>
#include <functional>

namespace hse {

// Worker-count cap shared by batch-parallel kernels and tiled inference.
// Results never depend on it: per-item work is independent and every
// cross-item reduction runs afterwards in index order.
void set_num_threads(int n);
int num_threads();

// Resolve the thread count from an explicit flag, falling back to the
// S2HSE_THREADS environment variable, then to 1.
int resolve_threads(int flag_value);

// Run fn(i) for i in [0, count), spread across num_threads() workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace hse
