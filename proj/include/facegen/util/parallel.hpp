#pragma once

#include <functional>

namespace facegen {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Indices are split
/// into contiguous chunks in order, so any per-index output is independent of
/// the thread count. The first exception (by chunk order) is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace facegen
