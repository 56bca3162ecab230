#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mscrowd {

/// Runs body(k) for k in [0, n) on `workers` threads using contiguous static
/// chunks. Each index is handled by exactly one call, so results written per
/// index do not depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    if (workers <= 1 || n < 2) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    const std::size_t w = std::min<std::size_t>(workers, n);
    const std::size_t chunk = (n + w - 1) / w;
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            try {
                for (std::size_t k = begin; k < end; ++k) body(k);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mscrowd
