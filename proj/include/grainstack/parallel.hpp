#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace grainstack {

// Worker count: an explicit positive request wins, then GRAINSTACK_THREADS,
// then the hardware concurrency.
int resolve_threads(int requested = 0);

// Runs body(i) for i in [begin, end) over `threads` workers in contiguous
// chunks. Bodies must not depend on each other's results.
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, int threads, Body&& body) {
    const std::size_t n = end > begin ? end - begin : 0;
    const std::size_t workers = std::min<std::size_t>(std::size_t(std::max(threads, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + n * w / workers;
        const std::size_t hi = begin + n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace grainstack
