#pragma once

// Deterministic replication-level parallelism.  Workers grab chunks of the
// index range through an atomic cursor and write into disjoint, preallocated
// slots; whoever aggregates afterwards walks the slots in index order.  The
// schedule therefore never leaks into the results.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace chad {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n).  Exceptions from workers are rethrown on the
// calling thread (first one wins; the rest of the range is abandoned).
inline void parallel_for(std::uint64_t n, int threads,
                         const std::function<void(std::uint64_t)>& fn) {
    const int nthreads = resolve_threads(threads);
    if (n == 0) return;
    if (nthreads <= 1 || n == 1) {
        for (std::uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }

    constexpr std::uint64_t kChunk = 64;
    std::atomic<std::uint64_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t begin = cursor.fetch_add(kChunk);
            if (begin >= n) return;
            const std::uint64_t end = begin + kChunk < n ? begin + kChunk : n;
            try {
                for (std::uint64_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace chad
