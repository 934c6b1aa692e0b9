#pragma once

#include <functional>

namespace geolift {

// Worker count: GEOLIFT_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Calls fn(i) for every i in [0, n), split into contiguous blocks across
// threads. fn must only write state owned by index i.
void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0);

}  // namespace geolift
