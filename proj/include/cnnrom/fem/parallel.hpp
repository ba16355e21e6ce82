#pragma once

#include <cstdint>
#include <functional>

namespace cnnrom::fem {

/// Worker cap: ROM_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Work items must
/// be independent; the first exception thrown is rethrown after all workers join.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace cnnrom::fem
