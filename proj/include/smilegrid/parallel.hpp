#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace smilegrid {

// Worker count used when the caller does not pass one. Reads SMILEGRID_WORKERS
// and falls back to 1.
inline int default_workers() {
    if (const char* env = std::getenv("SMILEGRID_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// Data-parallel map over [0, n). Items must be independent and write only
// their own outputs, so the result is identical for any worker count. If
// items throw, the exception of the lowest-index failing item is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::mutex mu;
    std::size_t first_bad = n;
    std::exception_ptr first_err;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nthreads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (i < first_bad) {
                        first_bad = i;
                        first_err = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_err) std::rethrow_exception(first_err);
}

} // namespace smilegrid
