#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace scs {

/// Worker cap for loops over independent items. `threads == 1` runs inline.
struct Parallelism {
    unsigned threads = 1;

    static Parallelism hardware() {
        return Parallelism{std::max(1u, std::thread::hardware_concurrency())};
    }
};

/**
 * Calls `fn(i)` for every i in [0, count). Items are handed out dynamically,
 * so `fn` must only write to per-item storage; callers reduce afterwards in
 * index order, which keeps results identical for any thread count. The first
 * exception thrown by a worker is rethrown on the calling thread.
 */
template <typename Fn>
void parallel_for(std::size_t count, Parallelism par, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(par.threads == 0 ? 1 : par.threads, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace scs
