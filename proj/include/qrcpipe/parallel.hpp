#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace qrcpipe {

// Runs fn(i) for i in [0, count) across up to n_threads workers (0 = hardware
// concurrency). fn must be safe to call concurrently for distinct i.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int n_threads = 0) {
    if (count == 0) return;
    unsigned workers = n_threads > 0 ? unsigned(n_threads) : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > count) workers = unsigned(count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qrcpipe
