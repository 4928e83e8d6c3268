#pragma once

#include <functional>

namespace nexus {

int HardwareThreads();

// Runs fn(i) for every i in [begin, end), statically chunked over at most
// `threads` workers (0 means all hardware threads). Rethrows the first worker
// exception after joining. Results must not depend on the partitioning.
void ParallelFor(int begin, int end, int threads, const std::function<void(int)>& fn);

}  // namespace nexus
