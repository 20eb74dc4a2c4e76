#pragma once

#include <functional>

namespace domeport {

// Default worker count: DOMEPORT_THREADS if set, else 1.
int DefaultThreadCount();

// Runs body(i) for i in [0, n) on up to `threads` workers. Items must write
// disjoint outputs; the first exception is rethrown after all workers stop.
void ParallelFor(int n, int threads, const std::function<void(int)>& body);

}  // namespace domeport
