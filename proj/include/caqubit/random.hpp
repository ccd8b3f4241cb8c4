#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace caqubit {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-derived seed for shot `index` of stream `stream`. Every Monte Carlo
/// shot seeds its own generator from this, so results do not depend on how
/// shots are distributed over workers.
inline constexpr std::uint64_t shot_seed(std::uint64_t master, std::uint64_t stream,
                                         std::uint64_t index) {
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

inline unsigned default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `workers` threads. Indices are handed
/// out in contiguous blocks; body must only write to per-index storage.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    constexpr std::size_t block = 8;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t start = next.fetch_add(block);
                if (start >= n) return;
                const std::size_t stop = std::min(n, start + block);
                for (std::size_t i = start; i < stop; ++i) body(i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next.store(n);
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(nthreads - 1);
        for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace caqubit
