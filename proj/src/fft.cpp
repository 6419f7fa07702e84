#include "qkr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace qkr {

namespace {

struct PlanSet {
    fftw_plan plan[2][2] = {};  // [aligned][forward]
};

// Plans live for the whole process; fftw planning is not thread-safe, so
// creation is serialised here while execution is not.
std::mutex g_plan_mutex;
std::map<std::size_t, PlanSet>& plan_cache()
{
    static std::map<std::size_t, PlanSet> cache;
    return cache;
}

PlanSet plans_for(std::size_t n)
{
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto& cache = plan_cache();
    if (auto it = cache.find(n); it != cache.end()) {
        return it->second;
    }
    auto* buffer = fftw_alloc_complex(n);
    if (buffer == nullptr) {
        throw std::bad_alloc();
    }
    const int len = static_cast<int>(n);
    PlanSet plans;
    for (int aligned = 0; aligned < 2; ++aligned) {
        const unsigned flags = FFTW_ESTIMATE | (aligned ? 0u : FFTW_UNALIGNED);
        for (int forward = 0; forward < 2; ++forward) {
            auto& plan = plans.plan[aligned][forward];
            plan = fftw_plan_dft_1d(len, buffer, buffer,
                                    forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
            if (plan == nullptr) {
                fftw_free(buffer);
                throw std::runtime_error("FFTW failed to create a plan");
            }
        }
    }
    fftw_free(buffer);
    cache.emplace(n, plans);
    return plans;
}

fftw_complex* as_fftw(std::span<std::complex<double>> data)
{
    return reinterpret_cast<fftw_complex*>(data.data());
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n)
{
    if (n == 0) {
        throw std::invalid_argument("FFT length must be positive");
    }
    const auto plans = plans_for(n);
    for (int a = 0; a < 2; ++a) {
        for (int f = 0; f < 2; ++f) {
            plans_[a][f] = plans.plan[a][f];
        }
    }
}

void Fft::run(std::span<std::complex<double>> data, bool forward) const
{
    if (data.size() != n_) {
        throw std::invalid_argument("FFT buffer length mismatch");
    }
    auto* ptr = as_fftw(data);
    const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(ptr)) == 0;
    fftw_execute_dft(static_cast<fftw_plan>(plans_[aligned][forward]), ptr, ptr);
}

void Fft::forward(std::span<std::complex<double>> data) const
{
    run(data, true);
}

void Fft::inverse(std::span<std::complex<double>> data) const
{
    run(data, false);
}

}  // namespace qkr
