#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace svpic {

/// Worker cap for data-parallel loops. 0 means hardware concurrency.
inline unsigned& thread_cap() {
    static unsigned cap = 0;
    return cap;
}

inline unsigned effective_threads(std::size_t n) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned cap = thread_cap() == 0 ? hw : thread_cap();
    if (n < 4096) return 1; // not worth spawning below this
    return static_cast<unsigned>(std::min<std::size_t>(cap, (n + 4095) / 4096));
}

/// Data-parallel loop over [0, n). The body must write only to index-owned
/// state; reductions go through pairwise_sum afterwards so results do not
/// depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned nt = effective_threads(n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

/// Fixed-order pairwise summation; the reduction tree depends only on n,
/// never on scheduling, so serial and threaded runs agree bit for bit.
template <class Getter>
double pairwise_sum(std::size_t lo, std::size_t hi, const Getter& get) {
    const std::size_t n = hi - lo;
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += get(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(lo, mid, get) + pairwise_sum(mid, hi, get);
}

inline double pairwise_sum(std::span<const double> v) {
    return pairwise_sum(0, v.size(), [&](std::size_t i) { return v[i]; });
}

} // namespace svpic
