#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace nutripred {

/// Process-wide worker count used by parallel_for. Results never depend on
/// this value: every task writes to a slot addressed by its own index.
inline std::size_t& thread_count() {
    static std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return n;
}

inline void set_thread_count(std::size_t n) {
    thread_count() = std::max<std::size_t>(1, n);
}

namespace detail {
inline bool& in_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
} // namespace detail

/// Runs fn(i) for i in [begin, end). Work is split into contiguous index
/// blocks, one per worker; nested calls degrade to serial execution.
/// fn must only write to state owned by index i.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
    if (begin >= end) return;
    const std::size_t total = end - begin;
    const std::size_t workers = std::min(thread_count(), total);
    if (workers <= 1 || detail::in_parallel_region()) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (total + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, w, lo, hi] {
            detail::in_parallel_region() = true;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
            detail::in_parallel_region() = false;
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace nutripred
