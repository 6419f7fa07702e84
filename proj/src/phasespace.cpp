#include "qkr/phasespace.hpp"

#include <cmath>
#include <ostream>

#include "qkr/parallel.hpp"
#include "qkr/scaling.hpp"
#include "qkr/textio.hpp"

namespace qkr {

PhasePortrait poincare_section(const SystemParams& params, double L,
                               const std::vector<MapState>& initial, int iterations,
                               std::uint64_t seed)
{
    if (initial.empty() || iterations < 1) {
        throw ParameterError("a portrait needs at least one orbit and one iteration");
    }
    const NoiseModel noise(L, seed);
    const auto records = evolve_ensemble(MapEnsemble(initial), params, noise, iterations,
                                         EvolveOptions{true});
    PhasePortrait portrait;
    portrait.params = params;
    portrait.level = L;
    portrait.seed = seed;
    portrait.orbits.resize(initial.size());
    for (std::size_t i = 0; i < initial.size(); ++i) {
        auto& orbit = portrait.orbits[i];
        orbit.reserve(records.history[i].size());
        for (const auto& s : records.history[i]) {
            orbit.emplace_back(s.theta, wrap_angle(s.J));
        }
    }
    return portrait;
}

PhasePortrait poincare_section(const SystemParams& params, double L,
                               const PortraitGrid& grid, std::uint64_t seed)
{
    if (grid.theta_points < 1 || grid.J_points < 1) {
        throw ParameterError("portrait grid must have at least one point per axis");
    }
    std::vector<MapState> initial;
    initial.reserve(static_cast<std::size_t>(grid.theta_points * grid.J_points));
    for (int j = 0; j < grid.J_points; ++j) {
        for (int i = 0; i < grid.theta_points; ++i) {
            initial.push_back({kTwoPi * (i + 0.5) / grid.theta_points,
                               kTwoPi * (j + 0.5) / grid.J_points});
        }
    }
    return poincare_section(params, L, initial, grid.iterations, seed);
}

double Separatrix::half_width() const
{
    return 2.0 * std::sqrt(kick);
}

double Separatrix::full_width() const
{
    return 4.0 * std::sqrt(kick);
}

Separatrix separatrix_curve(double kick, std::size_t points)
{
    if (!(kick >= 0.0)) {
        throw ParameterError("separatrix needs a non-negative kick strength");
    }
    if (points < 2) {
        throw ParameterError("separatrix needs at least two points");
    }
    Separatrix curve;
    curve.kick = kick;
    const double amplitude = 2.0 * std::sqrt(kick);
    for (std::size_t i = 0; i < points; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(points - 1);
        const double J = amplitude * std::abs(std::sin(0.5 * theta));
        curve.theta.push_back(theta);
        curve.upper.push_back(J);
        curve.lower.push_back(-J);
    }
    return curve;
}

SmearedBand smeared_band(double k, double epsilon, double L, std::size_t points)
{
    if (!(L >= 0.0 && L <= 2.0)) {
        throw ParameterError("noise level L must lie in [0, 2]");
    }
    const double kick = k * std::abs(epsilon);
    SmearedBand band;
    band.inner = separatrix_curve(kick * (1.0 - 0.5 * L), points);
    band.bare = separatrix_curve(kick, points);
    band.outer = separatrix_curve(kick * (1.0 + 0.5 * L), points);
    const double width = 4.0 * std::sqrt(kick);
    band.mean_square_width = (1.0 + 0.25 * L) * width * width;
    band.rms_width = std::sqrt(band.mean_square_width);
    return band;
}

bool orbit_escapes(MapState start, double base_kick, const NoiseModel& noise,
                   std::uint64_t trajectory, int t)
{
    const double centre = kTwoPi * std::round(start.J / kTwoPi);
    double phi = wrap_angle(start.theta);
    double J = start.J;
    const double kick = base_kick * noise.k_scale(trajectory);
    for (int s = 0; s < t; ++s) {
        phi += J - centre;
        if (phi <= 0.0 || phi >= kTwoPi) {
            return true;
        }
        J += kick * (1.0 + noise.kick_factor(trajectory, static_cast<std::uint32_t>(s))) *
             std::sin(phi);
    }
    return false;
}

double measure_island_half_width(double k, double epsilon, int iterations,
                                 std::size_t scan_points, double scan_limit)
{
    const double kick = k * std::abs(epsilon);
    if (!(kick > 0.0) || scan_points < 2) {
        throw ParameterError("island measurement needs k|eps| > 0 and >= 2 scan points");
    }
    const double limit = scan_limit * 2.0 * std::sqrt(kick);
    const NoiseModel quiet;
    std::vector<char> bounded(scan_points);
    parallel_blocks(scan_points, 256, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double dJ = limit * static_cast<double>(i) / static_cast<double>(scan_points - 1);
            bounded[i] = orbit_escapes({kPi, dJ}, kick, quiet, i, iterations) ? 0 : 1;
        }
    });
    double widest = 0.0;
    for (std::size_t i = 0; i < scan_points; ++i) {
        if (bounded[i]) {
            widest = limit * static_cast<double>(i) / static_cast<double>(scan_points - 1);
        }
    }
    return widest;
}

EscapeStatistics escape_statistics(double k, double epsilon, double L, std::size_t samples,
                                   int t, std::uint64_t seed)
{
    if (samples < 1 || t < 0) {
        throw ParameterError("escape statistics need samples >= 1 and t >= 0");
    }
    const NoiseModel noise(L, seed);
    const double kick = k * std::abs(epsilon);
    std::vector<char> inside(samples), escaped(samples);
    parallel_blocks(samples, 1024, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto [u, v] = noise.uniform_pair(Stream::initial_conditions, i, 0);
            const MapState start{kTwoPi * u, kTwoPi * v - kPi};
            inside[i] = classify_topology(start.theta, start.J, k, epsilon) ==
                        Topology::librating;
            escaped[i] = inside[i] && orbit_escapes(start, kick, noise, i, t);
        }
    });
    EscapeStatistics stats;
    stats.trajectories = samples;
    for (std::size_t i = 0; i < samples; ++i) {
        stats.librating += inside[i] ? 1 : 0;
        stats.escaped += escaped[i] ? 1 : 0;
    }
    stats.librating_fraction = static_cast<double>(stats.librating) / static_cast<double>(samples);
    if (stats.librating > 0) {
        const double n = static_cast<double>(stats.librating);
        const double p = static_cast<double>(stats.escaped) / n;
        stats.escape_fraction = p;
        stats.escape_std_error = std::sqrt(p * (1.0 - p) / n);
    }
    return stats;
}

void write_portrait(std::ostream& out, const PhasePortrait& portrait)
{
    write_meta(out, "format", "qkr-phase-portrait");
    write_meta(out, "version", "1");
    write_meta(out, "k", format_double(portrait.params.k));
    write_meta(out, "epsilon", format_double(portrait.params.epsilon));
    write_meta(out, "ell", std::to_string(portrait.params.ell));
    write_meta(out, "L", format_double(portrait.level));
    write_meta(out, "seed", std::to_string(portrait.seed));
    write_meta(out, "orbits", std::to_string(portrait.orbits.size()));
    out << "orbit,theta,J\n";
    for (std::size_t i = 0; i < portrait.orbits.size(); ++i) {
        for (const auto& [theta, J] : portrait.orbits[i]) {
            out << i << ',' << format_double(theta) << ',' << format_double(J) << '\n';
        }
        out << '\n';
    }
}

void write_band(std::ostream& out, const SmearedBand& band)
{
    write_meta(out, "format", "qkr-separatrix-band");
    write_meta(out, "version", "1");
    write_meta(out, "bare_kick", format_double(band.bare.kick));
    write_meta(out, "inner_kick", format_double(band.inner.kick));
    write_meta(out, "outer_kick", format_double(band.outer.kick));
    write_meta(out, "mean_square_width", format_double(band.mean_square_width));
    write_meta(out, "rms_width", format_double(band.rms_width));
    out << "theta,bare_upper,bare_lower,inner_upper,inner_lower,outer_upper,outer_lower\n";
    for (std::size_t i = 0; i < band.bare.theta.size(); ++i) {
        out << format_double(band.bare.theta[i]) << ',' << format_double(band.bare.upper[i])
            << ',' << format_double(band.bare.lower[i]) << ','
            << format_double(band.inner.upper[i]) << ',' << format_double(band.inner.lower[i])
            << ',' << format_double(band.outer.upper[i]) << ','
            << format_double(band.outer.lower[i]) << '\n';
    }
}

}  // namespace qkr
