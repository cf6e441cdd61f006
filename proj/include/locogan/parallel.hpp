#pragma once

#include <cstddef>
#include <functional>

namespace locogan {

/// Worker count: LOCOGAN_THREADS when set (>= 1), else the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must write disjoint state; the
/// result never depends on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace locogan
