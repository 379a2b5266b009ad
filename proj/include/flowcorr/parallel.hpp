#pragma once

#include <functional>

namespace flowcorr {

// Thread cap: FLOWCORR_THREADS if set, else hardware concurrency.
int thread_cap();

// Run fn(chunk) for chunk = 0..n_chunks-1 across up to thread_cap() threads.
// Chunk indices, not threads, own any per-chunk RNG substreams, so results
// are identical for every thread count.
void parallel_chunks(int n_chunks, const std::function<void(int)>& fn);

} // namespace flowcorr
