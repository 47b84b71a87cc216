#include "wp/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace wp {

int resolve_threads(int requested) {
    if (const char* env = std::getenv("WP_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_chunks(std::int64_t begin, std::int64_t end, int threads,
                     const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) return;
    const int nchunks = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), total));
    if (nchunks == 1) {
        fn(0, begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nchunks));
    for (int c = 0; c < nchunks; ++c) {
        const std::int64_t lo = begin + total * c / nchunks;
        const std::int64_t hi = begin + total * (c + 1) / nchunks;
        pool.emplace_back([&fn, c, lo, hi] { fn(c, lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace wp
