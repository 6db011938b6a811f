#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace rsum {

// Worker count used by every parallel loop in the library. 0 means hardware_concurrency.
inline std::atomic<unsigned>& jobs_setting() {
    static std::atomic<unsigned> jobs{0};
    return jobs;
}

inline void set_jobs(unsigned j) { jobs_setting().store(j); }

inline unsigned effective_jobs() {
    unsigned j = jobs_setting().load();
    if (j == 0) j = std::max(1u, std::thread::hardware_concurrency());
    return j;
}

// Splits [0, n) into fixed contiguous chunks, one per worker. Chunk boundaries depend
// only on n and the worker count, so callers that reduce per-chunk results in chunk
// order get the same answer on every run.
template <class F>
void parallel_chunks(std::size_t n, F&& body, unsigned workers = 0) {
    if (workers == 0) workers = effective_jobs();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        body(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = n * w / workers;
        std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&body, w, lo, hi] { body(std::size_t{w}, lo, hi); });
    }
    for (auto& t : pool) t.join();
}

template <class F>
void parallel_for(std::size_t n, F&& body, unsigned workers = 0) {
    parallel_chunks(n, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) body(i);
    }, workers);
}

}  // namespace rsum
