#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace deft {

inline int default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

/// Runs body(i) for i in [0, n) on up to n_threads threads with static
/// chunking. Each index must write only its own output slot; under that
/// contract results are identical to the serial loop.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    std::size_t workers = static_cast<std::size_t>(std::max(1, n_threads));
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        std::size_t begin = t * n / workers;
        std::size_t end = (t + 1) * n / workers;
        pool.emplace_back([&, begin, end]() {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace deft
