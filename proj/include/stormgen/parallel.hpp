#pragma once

#include <cstddef>
#include <functional>

namespace stormgen {

/// Worker count used by parallel_for (default: hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls fn(i) for i in [0, n) over contiguous chunks. fn must only write to
/// per-index state; results are therefore independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace stormgen
