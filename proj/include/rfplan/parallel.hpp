// SPDX-License-Identifier: Apache-2.0

#ifndef RFPLAN_PARALLEL_HPP
#define RFPLAN_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rfplan
{

// Static partition of [0, n) into contiguous blocks, one per worker. fn(begin, end, worker).
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads == 0 ? 1 : threads, n));
    if (workers <= 1)
    {
        fn(std::size_t{0}, n, 0u);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex guard;
    for (std::size_t w = 0; w < workers; ++w)
    {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end, w] {
            try
            {
                fn(begin, end, static_cast<unsigned>(w));
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(guard);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto &t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

inline unsigned default_thread_count()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace rfplan

#endif
