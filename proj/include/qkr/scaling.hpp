#pragma once

// Resonance-peak energy law, numerical tabulation of the scaling
// contributions Phi0 and G, and the scaling functions
//
//   H(x)    = 1 - Phi0(x) + 4 G(x) / (pi x)
//   H(x, L) = 1 + L^2/12 - (1 - L/(8 pi)) Phi0(x) + 4 G(x) / (pi x)
//
// with x = t sqrt(k |eps|).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkr/interpolation.hpp"
#include "qkr/model.hpp"

namespace qkr {

class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Mean resonant energy with amplitude noise: (k^2/4) t (1 + L^2/12).
double resonance_peak_energy(double k, int t, double L);

/// x = t sqrt(k |eps|).
double scaling_variable(double k, int t, double epsilon);

enum class Topology { librating, rotating };

/// Classifies an initial condition by its pendulum energy relative to the
/// principal resonance centred at theta = pi, J = 2 pi m:
/// librating iff dJ^2/2 + k|eps| cos(theta0) < k|eps|, with
/// dJ = ((J0 + pi) mod 2pi) - pi. Equality counts as rotating.
Topology classify_topology(double theta0, double J0, double k, double epsilon);

/// Relative change in weight of rotating orbits, L / (8 pi).
double rotating_weight_change(double L);

struct ScalingTable {
    inline static const std::string kFormat = "qkr-scaling-table";
    static constexpr int kVersion = 1;

    std::vector<double> x;
    std::vector<int> kicks;
    std::vector<double> phi0;
    std::vector<double> G;
    /// Directly measured <E> / (k^2 t / 4) and its standard error.
    std::vector<double> ratio;
    std::vector<double> ratio_std_error;

    double eps_ref = 1e-4;
    double k_ref = 2.8;
    int ell = 2;
    std::size_t ensemble_size = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return x.size(); }
    /// 1 - Phi0 + 4 G / (pi x) at node i.
    double reconstructed(std::size_t i) const;
};

struct TabulationOptions {
    double eps_ref = 1e-4;
    double k_ref = 2.8;
    int ell = 2;
    std::size_t ensemble_size = 200000;
    std::size_t grid_points = 60;
    double x_min = 1e-2;
    double x_max = 1e2;
    std::uint64_t seed = 20070601;
    /// Explicit x grid; overrides the log grid when non-empty.
    std::vector<double> x_grid;
};

/// Evolves the noise-free theory ensemble for t = round(x / sqrt(k eps))
/// kicks at every grid x and splits the energy by initial topology:
/// Phi0 = 1 - (rotating share), G = (pi x / 4) (librating share).
/// Grid points needing t < 1, or repeating the previous t, are dropped with
/// a warning; stored x values are the realised t sqrt(k eps).
ScalingTable tabulate_phi0_G(const TabulationOptions& options);

/// Evaluates H and H(x, L) from a table by monotone cubic interpolation of
/// Phi0 and G on log x. No extrapolation: x outside the table throws
/// RangeError.
class ScalingFunction {
public:
    explicit ScalingFunction(const ScalingTable& table);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    bool in_range(double x) const { return x >= x_min_ && x <= x_max_; }

    double phi0(double x) const;
    double G(double x) const;
    double H(double x) const;
    double H_noisy(double x, double L) const;

private:
    double x_min_ = 0.0;
    double x_max_ = 0.0;
    MonotoneCubic phi0_;
    MonotoneCubic G_;
};

double H_of_x(double x, const ScalingTable& table);
double H_noisy(double x, double L, const ScalingTable& table);

void write_scaling_table(std::ostream& out, const ScalingTable& table);
ScalingTable read_scaling_table(std::istream& in);
void save_scaling_table(const std::string& path, const ScalingTable& table);
ScalingTable load_scaling_table(const std::string& path);

}  // namespace qkr
