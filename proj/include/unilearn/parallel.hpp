#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <span>

namespace unilearn {

/// Global cap on worker threads (default 1). Results never depend on it:
/// parallel sections write into per-index slots and reduce serially.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Calls body(i) for i in [0, n) on up to max_threads() threads with static
/// contiguous chunking. The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (tree) summation in a fixed order.
double pairwise_sum(std::span<const double> values);

} // namespace unilearn
