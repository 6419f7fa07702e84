#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace qkr {

/// 64-byte aligned storage so that FFTW can use its SIMD codelets.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n)
    {
        return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

using ComplexBuffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

/// In-place complex FFT of a fixed length backed by FFTW. Plans are created
/// once per length and shared; execution is thread-safe.
///
/// forward:  X_m = sum_j x_j exp(-2 pi i j m / n)
/// inverse:  x_j = sum_m X_m exp(+2 pi i j m / n)   (unnormalised)
///
/// Buffers with FFTW's preferred alignment (ComplexBuffer) take the SIMD
/// plans; anything else falls back to plans made with FFTW_UNALIGNED.
class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const { return n_; }

    void forward(std::span<std::complex<double>> data) const;
    void inverse(std::span<std::complex<double>> data) const;

private:
    void run(std::span<std::complex<double>> data, bool forward) const;

    std::size_t n_;
    void* plans_[2][2];  // [aligned][forward]
};

}  // namespace qkr
