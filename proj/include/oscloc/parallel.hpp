#pragma once

#include <cstddef>
#include <functional>

namespace oscloc {

// Worker count for data-parallel loops. The OSC_THREADS environment variable
// caps it; 0 or unset means all hardware threads.
std::size_t worker_count();

// Runs fn(i) for every i in [0, n). Callers must write results to disjoint
// slots so the outcome is independent of scheduling. Nested calls from inside
// a worker run inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace oscloc
