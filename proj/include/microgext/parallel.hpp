// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace microgext {

/// Worker count: MICROGEXT_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
int max_threads();
/// Overrides the environment for this process; 0 restores the default.
void set_max_threads(int n);

/// Runs body(i) for i in [0, n) on up to max_threads() threads. Each index
/// runs exactly once; callers write results by index so output order never
/// depends on scheduling. The first exception is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace microgext
