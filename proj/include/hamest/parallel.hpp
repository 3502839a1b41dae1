#pragma once

#include <cstddef>
#include <functional>

namespace hamest {

// Global worker count for parallel_for. 0 restores hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(0..n-1) over a static block partition. fn must confine its writes
// to per-index slots, so the result is identical to the serial loop whatever
// the scheduling. Nested calls run serially on the calling thread. The first
// exception (lowest index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hamest
