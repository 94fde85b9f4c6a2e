#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace cortexforge {

/// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n) split into contiguous chunks across workers.
/// fn must only write to slots owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Pairwise summation with a fixed split order, so the result does not depend
/// on thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace cortexforge
