#pragma once

#include <cstddef>
#include <functional>

namespace wdro {

/// Worker cap: WDRO_THREADS when set to a positive integer, otherwise the
/// machine's hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls body(i) for every i in [0, count). Work is split into contiguous
/// blocks; callers write results by index so output never depends on the
/// number of workers. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace wdro
