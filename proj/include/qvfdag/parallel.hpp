#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qvfdag {

/// Fixed-width fork/join executor. Each index is processed exactly once and
/// results must be written to index-addressed slots, so output never depends
/// on the worker count or on scheduling.
class Executor {
public:
    explicit Executor(std::size_t threads = 1) : threads_{std::max<std::size_t>(1, threads)} {}

    static std::size_t hardware_threads() noexcept
    {
        return std::max<unsigned>(1, std::thread::hardware_concurrency());
    }

    std::size_t threads() const noexcept { return threads_; }

    /// Runs fn(i) for i in [0, count). The first exception (lowest index) is rethrown
    /// after all workers have joined.
    template <class F>
    void parallel_for(std::size_t count, F&& fn) const
    {
        if (count == 0) return;
        const std::size_t workers = std::min(threads_, count);
        if (workers == 1) {
            for (std::size_t i = 0; i < count; ++i) fn(i);
            return;
        }

        std::atomic<std::size_t> next{0};
        std::mutex err_mutex;
        std::size_t err_index = count;
        std::exception_ptr err;

        auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock{err_mutex};
                    if (i < err_index) {
                        err_index = i;
                        err = std::current_exception();
                    }
                }
            }
        };

        {
            std::vector<std::jthread> pool;
            pool.reserve(workers - 1);
            for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
            work();
        }
        if (err) std::rethrow_exception(err);
    }

private:
    std::size_t threads_;
};

}  // namespace qvfdag
