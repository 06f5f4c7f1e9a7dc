#pragma once

#include <cstddef>
#include <functional>

namespace mcd {

/// Environment variable capping the worker pool size.
inline constexpr const char* kMaxWorkersEnv = "MCD_MAX_WORKERS";

/// Hardware concurrency, capped by MCD_MAX_WORKERS when set to a positive integer.
std::size_t worker_count();

/// Runs fn(i) for i in [0, count) on up to worker_count() threads. Each index runs
/// exactly once; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace mcd
