#pragma once

#include <cstddef>
#include <functional>

namespace rheoflow {

/// Worker count: hardware concurrency capped by RHEOFLOW_THREADS when set.
int worker_count();

/// Calls fn(i) for i in [0, count) on up to worker_count() threads. Each index
/// must write only its own output slot, which keeps results independent of
/// the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rheoflow
