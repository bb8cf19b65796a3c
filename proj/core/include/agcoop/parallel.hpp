#pragma once

#include <cstddef>
#include <functional>

namespace agcoop {

// Worker count from AGCOOP_THREADS, falling back to hardware concurrency.
// Only affects wall-clock time; every parallel region in the library writes
// to disjoint, index-addressed outputs.
std::size_t worker_count();

// Calls body(i) for i in [0, count), split into contiguous chunks.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace agcoop
