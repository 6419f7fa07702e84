#pragma once

// Poincare sections of the epsilon-classical map, the pendulum separatrix,
// the noise-smeared separatrix band, and escape statistics of the
// principal resonance island.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "qkr/model.hpp"
#include "qkr/pclassical.hpp"

namespace qkr {

using PhasePoint = std::pair<double, double>;  // (theta, J mod 2pi)

struct PhasePortrait {
    std::vector<std::vector<PhasePoint>> orbits;
    SystemParams params;
    double level = 0.0;
    std::uint64_t seed = 0;
};

struct PortraitGrid {
    int theta_points = 20;
    int J_points = 20;
    int iterations = 500;
};

/// Evolves a uniform theta x (J mod 2pi) grid of initial conditions and
/// records every iterate reduced to one cell.
PhasePortrait poincare_section(const SystemParams& params, double L,
                               const PortraitGrid& grid, std::uint64_t seed);

/// Same, for explicit initial conditions.
PhasePortrait poincare_section(const SystemParams& params, double L,
                               const std::vector<MapState>& initial, int iterations,
                               std::uint64_t seed);

/// Separatrix of the pendulum island centred at theta = pi, J = 0:
/// J(theta) = +-2 sqrt(kick) |sin(theta / 2)|.
struct Separatrix {
    double kick = 0.0;
    std::vector<double> theta;
    std::vector<double> upper;
    std::vector<double> lower;

    double half_width() const;  // 2 sqrt(kick)
    double full_width() const;  // 4 sqrt(kick)
};

Separatrix separatrix_curve(double kick, std::size_t points = 201);

/// Separatrices for the extreme kick strengths k(1 -+ L/2) of the noise
/// support, plus the bare curve and the mean-square width marker
/// <dJ_res^2> = (1 + L/4) dJ_res^2 with dJ_res = 4 sqrt(k|eps|).
struct SmearedBand {
    Separatrix inner;
    Separatrix bare;
    Separatrix outer;
    double mean_square_width = 0.0;
    double rms_width = 0.0;
};

SmearedBand smeared_band(double k, double epsilon, double L, std::size_t points = 201);

/// Largest initial |dJ| at theta = pi whose L = 0 orbit stays bounded in
/// the island for `iterations` kicks, found by scanning `scan_points`
/// offsets up to `scan_limit` times the pendulum half-width.
double measure_island_half_width(double k, double epsilon, int iterations = 2000,
                                 std::size_t scan_points = 4000, double scan_limit = 1.5);

struct EscapeStatistics {
    std::size_t trajectories = 0;
    std::size_t librating = 0;          // initially inside the separatrix
    std::size_t escaped = 0;            // of those, rotating within t kicks
    double librating_fraction = 0.0;    // librating / trajectories
    double escape_fraction = 0.0;       // escaped / librating
    double escape_std_error = 0.0;
};

/// Uniform ensemble over one cell; initially librating orbits are evolved
/// t kicks with noise level L and counted as escaped once they rotate.
EscapeStatistics escape_statistics(double k, double epsilon, double L, std::size_t samples,
                                   int t, std::uint64_t seed);

/// True if the orbit from `start` rotates within t kicks: its slow angle
/// phi_{s+1} = phi_s + (J_s - 2 pi m), measured from the resonance centre
/// 2 pi m nearest to J0, crosses the hyperbolic point at 0 or 2pi.
bool orbit_escapes(MapState start, double base_kick, const NoiseModel& noise,
                   std::uint64_t trajectory, int t);

void write_portrait(std::ostream& out, const PhasePortrait& portrait);
void write_band(std::ostream& out, const SmearedBand& band);

}  // namespace qkr
