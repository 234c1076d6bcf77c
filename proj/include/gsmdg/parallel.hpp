#ifndef GSMDG_PARALLEL_HPP
#define GSMDG_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gsmdg {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads (jobs == 0 means
/// hardware concurrency). Work items are claimed dynamically; callers write
/// results into pre-sized slots indexed by i, so output never depends on
/// scheduling. The first exception thrown by any item is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (jobs == 0) {
        jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    jobs = std::min(jobs, count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    pool.clear();  // joins
    if (failure) std::rethrow_exception(failure);
}

}  // namespace gsmdg

#endif  // GSMDG_PARALLEL_HPP
