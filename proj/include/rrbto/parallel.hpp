#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rrbto {

/// Number of worker threads used by parallel_for.  Controlled by the
/// RRBTO_THREADS environment variable; defaults to the hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("RRBTO_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 256));
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(worker, i) for i in [0, n) on up to thread_count() threads.
///
/// Work is split into contiguous index ranges; worker w (0-based, < the
/// worker count) handles one range, so callers can hand each worker its own
/// scratch state.  Callers that write results into per-index slots get the
/// same memory contents regardless of the thread count; any subsequent
/// reduction over index order is then deterministic.  The first exception
/// thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for_workers(int n, Fn&& fn) {
    if (n <= 0) return;
    const int workers = std::min(thread_count(), n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(0, i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(w, i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Runs fn(i) for i in [0, n); see parallel_for_workers.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    parallel_for_workers(n, [&](int, int i) { fn(i); });
}

} // namespace rrbto
