#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace espine {

inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Run fn(begin, end) over [0, n) split across `threads` workers. The split
// is deterministic and results must not depend on execution order.
inline void parallel_for(std::size_t n, unsigned threads,
        const std::function<void(std::size_t, std::size_t)>& fn)
{
    threads = resolve_threads(threads);
    if (n == 0)
        return;
    if (threads <= 1 || n == 1)
    {
        fn(0, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e)
            break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& t : pool)
        t.join();
}

} // namespace espine
