#pragma once

#include <functional>

namespace graspkit {

/// Number of worker threads, capped by the GRASPKIT_THREADS environment
/// variable when set.
int thread_budget();

/// Runs fn(i) for i in [begin, end), chunked across the thread budget.
/// Deterministic as long as iterations write disjoint outputs.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace graspkit
