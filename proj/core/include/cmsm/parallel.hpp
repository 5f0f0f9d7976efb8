#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cmsm {

/// Worker cap from CMSM_THREADS, else the hardware concurrency (at least 1).
[[nodiscard]] int default_thread_count();

/// Runs fn(0..n-1) on up to `threads` workers. Items are assigned round-robin and each
/// item is computed by exactly one worker, so results do not depend on the thread count.
/// The exception of the lowest failing index is rethrown.
void parallel_for(int n, int threads, std::function<void(int)> const &fn);

}  // namespace cmsm
