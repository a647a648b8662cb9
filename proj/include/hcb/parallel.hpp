#pragma once
// Minimal index-space parallel map. Results are written by index, so output
// ordering never depends on scheduling; with one hardware thread it simply
// runs inline.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hcb {

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned maxThreads = 0) {
    if (count == 0) return;
    unsigned hw = maxThreads ? maxThreads : std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned nThreads = static_cast<unsigned>(
        std::min<std::size_t>(count, hw));
    if (nThreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr firstError;
    std::mutex errorMutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!firstError) firstError = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nThreads - 1);
    for (unsigned t = 1; t < nThreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (firstError) std::rethrow_exception(firstError);
}

}  // namespace hcb
