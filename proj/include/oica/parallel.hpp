#pragma once

#include <cstddef>
#include <functional>

namespace oica {

/// Worker count: OICA_THREADS if set (>= 1), otherwise the hardware
/// concurrency, never more than `tasks`.
std::size_t worker_count(std::size_t tasks);

/// Runs body(i) for i in [0, n). Results must be written to slots indexed by
/// i so output order does not depend on scheduling. The first exception
/// thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace oica
