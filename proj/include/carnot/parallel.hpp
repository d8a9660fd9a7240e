#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace carnot {

/// Worker count: explicit override if set, else CARNOT_THREADS, else the
/// hardware concurrency.
int thread_count();
void set_thread_count(int threads);  // <= 0 restores the default

/// Runs body(begin, end) over contiguous chunks of [0, n). Work items must
/// write only to their own indices; the first exception (lowest chunk) is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Fixed-order pairwise summation; the result depends only on the values.
double pairwise_sum(std::span<const double> values);

}  // namespace carnot
