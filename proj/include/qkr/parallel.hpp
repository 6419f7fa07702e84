#pragma once

// Index-parallel loop over independent work items. Results must be written
// into per-index slots; reductions happen afterwards in index order, so the
// worker count never changes a result bit.

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qkr {

/// Number of workers used by parallel_for; 0 means the OpenMP default.
void set_worker_count(int workers);
int worker_count();

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto count = static_cast<long long>(n);
#ifdef _OPENMP
    const int workers = worker_count();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
#endif
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Splits [0, n) into contiguous blocks of at most `block` items and calls
/// fn(begin, end) for each, in parallel.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block, Fn&& fn)
{
    if (block == 0) {
        block = 1;
    }
    const std::size_t blocks = (n + block - 1) / block;
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * block;
        const std::size_t end = begin + block < n ? begin + block : n;
        fn(begin, end);
    });
}

}  // namespace qkr
