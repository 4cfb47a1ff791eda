#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace skillgp {

/// Worker count for a requested value; 0 means all hardware threads.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/*
 * Calls fn(begin, end) on `threads` contiguous blocks of [0, count). Blocks
 * depend only on count and threads, and every index is handled by exactly
 * one call, so results that are written per index do not depend on timing.
 * The first exception thrown by a worker is rethrown.
 */
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count < 2) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t blocks = std::min(workers, count);
    std::vector<std::exception_ptr> errors(blocks);
    std::vector<std::thread> pool;
    pool.reserve(blocks - 1);
    auto run = [&](std::size_t b) {
        const std::size_t begin = count * b / blocks;
        const std::size_t end = count * (b + 1) / blocks;
        try {
            fn(begin, end);
        } catch (...) {
            errors[b] = std::current_exception();
        }
    };
    for (std::size_t b = 1; b < blocks; ++b) pool.emplace_back(run, b);
    run(0);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace skillgp
