#include "qkr/stats.hpp"

#include <cmath>

namespace qkr {

MeanError strided_mean_and_stderr(std::span<const double> values,
                                  std::size_t offset, std::size_t stride)
{
    MeanError out;
    double sum = 0.0;
    for (std::size_t i = offset; i < values.size(); i += stride) {
        sum += values[i];
        ++out.count;
    }
    if (out.count == 0) {
        return out;
    }
    out.mean = sum / static_cast<double>(out.count);
    if (out.count < 2) {
        return out;
    }
    double ss = 0.0;
    for (std::size_t i = offset; i < values.size(); i += stride) {
        const double d = values[i] - out.mean;
        ss += d * d;
    }
    const double n = static_cast<double>(out.count);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

MeanError mean_and_stderr(std::span<const double> values)
{
    return strided_mean_and_stderr(values, 0, 1);
}

}  // namespace qkr
