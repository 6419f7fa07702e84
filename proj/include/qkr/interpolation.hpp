#pragma once

#include <span>
#include <vector>

namespace qkr {

/// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch-Carlson
/// slopes, as in PCHIP). Monotone data give a monotone interpolant and no
/// interval overshoots its end values.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    /// `x` strictly increasing, at least two nodes.
    MonotoneCubic(std::span<const double> x, std::span<const double> y);

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

    /// Evaluates inside [front, back]; callers check the range.
    double operator()(double x) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slope_;
};

}  // namespace qkr
