#include "mcd/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mcd {

std::size_t worker_count()
{
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv(kMaxWorkersEnv)) {
        try {
            const long v = std::stol(cap);
            if (v > 0)
                n = std::min(n, static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn)
{
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace mcd
