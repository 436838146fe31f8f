#pragma once

#include <cstddef>
#include <functional>

namespace gstrument {

/// Worker count from GSTRUMENT_THREADS (>= 1), else hardware concurrency.
std::size_t thread_budget();

/// Runs body(i) for i in [0, n) on up to thread_budget() threads. Each index
/// is visited exactly once; callers must write to disjoint outputs so the
/// result does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Same partitioning as parallel_for, but hands each worker its contiguous
/// range [lo, hi) so per-worker scratch state can be set up once.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t lo, std::size_t hi)>& body);

}  // namespace gstrument
