#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arbp {

/// Worker count: ARBP_NUM_THREADS if set to a positive integer, else the
/// hardware concurrency.
inline std::size_t thread_count() {
    if (const char* env = std::getenv("ARBP_NUM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls f(k) for k in [0, n) on up to thread_count() workers. Every index
/// runs exactly once; the first exception thrown is rethrown after all
/// workers finish. Callers write results into per-index slots so that any
/// reduction afterwards happens in a fixed order.
template <typename F>
void parallel_for(std::size_t n, F&& f, std::size_t max_workers = 0) {
    std::size_t workers = std::min(n, max_workers ? max_workers : thread_count());
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) f(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                f(k);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
        body();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace arbp
