#pragma once

#include <cstddef>
#include <span>

namespace qkr {

struct MeanError {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n); 0 for n < 2
    std::size_t count = 0;
};

/// Two-pass mean and standard error, summed in index order.
MeanError mean_and_stderr(std::span<const double> values);

/// Mean and standard error of every `stride`-th value starting at `offset`.
MeanError strided_mean_and_stderr(std::span<const double> values,
                                  std::size_t offset, std::size_t stride);

}  // namespace qkr
