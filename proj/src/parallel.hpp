#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace sdelong::detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(worker, index) for index in [0, count) on `threads` workers.
/// Indices are handed out in chunks from a shared counter; callers write
/// results into per-index slots so the outcome does not depend on scheduling.
/// If any body throws, the exception from the lowest index is rethrown after
/// all workers finish.
template <class MakeWorker, class Body>
void parallel_for(std::int64_t count, int threads, MakeWorker&& make_worker, Body&& body) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::int64_t>(count, 1 << 20))));
    constexpr std::int64_t kChunk = 16;
    std::atomic<std::int64_t> next{0};
    std::mutex error_mutex;
    std::int64_t error_index = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr error;

    auto run = [&]() {
        auto worker = make_worker();
        for (;;) {
            const std::int64_t begin = next.fetch_add(kChunk);
            if (begin >= count) break;
            const std::int64_t end = std::min(count, begin + kChunk);
            for (std::int64_t i = begin; i < end; ++i) {
                try {
                    body(worker, i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        }
    };

    if (threads == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace sdelong::detail
