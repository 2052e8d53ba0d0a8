#pragma once

#include <functional>

namespace funspec {

/// Worker count used by the per-frequency loops. Defaults to FUNSPEC_THREADS
/// when set, otherwise 1. Results never depend on this value.
int num_threads();
void set_num_threads(int n);

/// Runs fn(i) for i in [begin, end) split into contiguous static chunks.
/// Each index is visited exactly once; fn must only write to index-owned
/// storage. Exceptions from workers are rethrown on the calling thread.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace funspec
