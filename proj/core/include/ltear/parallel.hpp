#pragma once

#include <cstddef>
#include <functional>

namespace ltear {

/// Environment variable that caps worker threads for sweeps and replications.
inline constexpr const char* kThreadsEnv = "LTEAR_THREADS";

/// LTEAR_THREADS if set to a positive integer, else hardware concurrency.
std::size_t default_parallelism();

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; the first exception thrown by any body is rethrown
/// after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace ltear
