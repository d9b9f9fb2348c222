#pragma once

#include <cstddef>
#include <functional>

namespace dashgs {

/// Worker count used by pixel-parallel loops: DASH_THREADS when set to a
/// positive integer, otherwise the hardware concurrency (at least 1).
int worker_count();

/// Runs body(i) for every i in [0, n). Items are handed out dynamically, so
/// callers must make each item's output independent of which worker ran it
/// and combine per-item results in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

}  // namespace dashgs
