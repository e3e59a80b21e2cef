#pragma once

#include <cstddef>
#include <functional>

namespace p2v {

/// Process-wide worker count for parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(begin, end) over a partition of [0, n) on up to thread_count()
/// threads. Ranges are contiguous and disjoint, so writes to per-index slots
/// need no synchronization. Callers that reduce must do so with a fixed
/// chunking of their own (see Tape's weight-gradient accumulation) to keep
/// results independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

/// Grain-aware variant: runs serially when n*grain_cost is small.
void parallel_for_grain(std::size_t n, std::size_t min_per_thread,
                        const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace p2v
