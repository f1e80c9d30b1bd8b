#pragma once

#include <cstddef>
#include <functional>

namespace heavytail {

/// requested > 0 wins; otherwise HEAVYTAIL_THREADS, otherwise the hardware
/// concurrency (at least 1).
unsigned resolve_thread_count(unsigned requested = 0);

/// Runs task(i) for i in [0, count) on up to `threads` workers. Tasks must not
/// share mutable state; the first exception is rethrown after all workers
/// finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace heavytail
