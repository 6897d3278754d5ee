#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <thread>
#include <vector>

namespace ldhit {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LDHIT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(block_index, begin, end) over [0, n) split into fixed-size blocks.
// The block decomposition depends only on (n, block_size), never on the
// thread count, so per-block results can be reduced in block order to give
// scheduling-independent totals.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block_size, int threads, Fn&& fn) {
    if (n == 0) return;
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    const int n_threads = std::min<std::size_t>(std::max(1, threads), n_blocks);

    if (n_threads == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                fn(b, b * block_size, std::min(n, (b + 1) * block_size));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ldhit
