#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace wkam {

/// Worker count: hardware concurrency, capped by WEAKKAM_THREADS when set.
inline unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("WEAKKAM_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (...) {
        }
    }
    return n;
}

/// Runs body(i) for i in [0, n). Each index must write only its own outputs, so
/// results do not depend on the schedule.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 64) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_count(), (n + min_chunk - 1) / min_chunk));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace wkam
