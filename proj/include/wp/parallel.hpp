#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace wp {

// Resolve a thread-count request: 0 means "use hardware", the WP_THREADS
// environment variable overrides everything. All call sites are written so
// results do not depend on the resolved count.
int resolve_threads(int requested);

// Static range split; fn(chunk_index, begin, end) runs once per chunk.
// Chunk boundaries depend only on (begin, end, threads), never on timing.
void parallel_chunks(std::int64_t begin, std::int64_t end, int threads,
                     const std::function<void(int, std::int64_t, std::int64_t)>& fn);

}  // namespace wp
