#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace sdelimit {

/// Number of workers to use when the caller asks for 0.
inline int default_workers() noexcept {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls body(i) for every i in [0, count) on `workers` threads.
/// Indices are handed out in blocks; body must write only to slot i of its output.
/// The first exception thrown by any worker is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
    if (workers <= 0) workers = default_workers();
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(count, 1));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    constexpr std::size_t block = 64;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t start = next.fetch_add(block);
            if (start >= count) return;
            const std::size_t stop = std::min(count, start + block);
            try {
                for (std::size_t i = start; i < stop; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    try {
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
    } catch (const std::system_error& e) {
        failed = true;
        for (auto& th : pool) th.join();
        throw ResourceError(std::string("could not start worker threads: ") + e.what());
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace sdelimit
