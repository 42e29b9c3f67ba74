#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace aclnet {

// Chunked index-range parallelism. Each index is processed exactly once and
// every output element is written by exactly one task, so results are
// bit-identical for any thread count.
inline void parallel_for(int64_t n, int threads,
                         const std::function<void(int64_t begin, int64_t end)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    int workers = static_cast<int>(std::min<int64_t>(threads, n));
    int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        int64_t begin = w * chunk;
        int64_t end = std::min<int64_t>(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace aclnet
