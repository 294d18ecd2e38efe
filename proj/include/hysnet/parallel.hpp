#pragma once

#include <cstddef>
#include <functional>

namespace hysnet {

// Process-wide worker pool for data-parallel kernels. Work items are split
// into contiguous ranges with static partitioning; every item writes a
// disjoint output region, so results are bit-identical for any thread count.
// set_threads(1) (the --strict-deterministic path) forces serial execution.
void set_threads(std::size_t n);
std::size_t thread_count();

// Calls body(begin, end) over a static partition of [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hysnet
