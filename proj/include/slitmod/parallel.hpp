#pragma once

#include <cstddef>
#include <functional>

namespace slitmod {

/** Worker count used by parallel_for; 0 selects the hardware concurrency. */
void set_thread_count(int threads);
int thread_count();

/** Runs f(i) for i in [0, n). Results must be written to per-index slots. */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace slitmod
