#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace finslerconv {

// Worker count: FINSLERCONV_THREADS caps it, hardware concurrency otherwise.
inline int worker_count() {
    static const int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        if (const char* env = std::getenv("FINSLERCONV_THREADS")) {
            const int cap = std::atoi(env);
            if (cap > 0) n = std::min(n, cap);
        }
        return n;
    }();
    return cached;
}

// Runs fn(row) for row in [0, rows). Each row writes disjoint outputs, so the
// result is independent of the thread count and of scheduling.
inline void parallel_rows(int rows, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), rows);
    if (workers <= 1) {
        for (int r = 0; r < rows; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int r = w; r < rows; r += workers) fn(r);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace finslerconv
