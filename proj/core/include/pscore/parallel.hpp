#pragma once

#include <cstddef>
#include <functional>

namespace pscore {

// Worker-thread budget. Reads the PSCORE_THREADS environment variable once;
// unset, empty, or unparsable values mean 1 (single-threaded, the
// determinism-first default). Values are clamped to [1, 256].
std::size_t thread_cap();

// Runs fn(lo, hi) over a partition of [begin, end) on up to thread_cap()
// threads. Chunks are contiguous and their boundaries depend only on the range
// and the cap, so any per-element computation that is itself deterministic
// stays deterministic under parallelism. Exceptions from workers are rethrown.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace pscore
