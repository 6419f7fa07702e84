#include "qkr/parallel.hpp"

#include <atomic>

namespace qkr {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int workers)
{
    g_workers.store(workers < 0 ? 0 : workers);
}

int worker_count()
{
    const int w = g_workers.load();
#ifdef _OPENMP
    return w > 0 ? w : omp_get_max_threads();
#else
    return w > 0 ? w : 1;
#endif
}

}  // namespace qkr
