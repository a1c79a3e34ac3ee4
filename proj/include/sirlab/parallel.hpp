/// @file parallel.hpp
/// @brief Index-parallel replica scheduling with order-independent results.

#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sirlab {

/// Runs fn(k) for k in [0, n) on up to `jobs` threads (0 = hardware
/// concurrency). Each index is processed exactly once; fn must write its
/// result into a preallocated slot keyed by k, so thread scheduling cannot
/// affect the collected output. The first exception, if any, is rethrown.
inline void parallel_for_index(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned workers = (jobs > 0) ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers == 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t k = next.fetch_add(1);
                if (k >= n) break;
                try {
                    fn(k);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace sirlab
