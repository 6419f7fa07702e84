#pragma once

// The epsilon-classical standard map with amplitude fluctuations:
//
//   theta_{s+1} = theta_s + J_s            (mod 2pi)
//   J_{s+1}     = J_s + |eps| k (1 + R_s) sin(theta_{s+1})
//
// J is never reduced; energies need the true displacement.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkr/model.hpp"
#include "qkr/stats.hpp"

namespace qkr {

struct MapState {
    double theta = 0.0;
    double J = 0.0;
};

/// One map iteration; the kick uses the updated angle.
MapState map_step(MapState state, double effective_kick);

/// Exact inverse of map_step for the same effective kick.
MapState map_step_inverse(MapState state, double effective_kick);

/// Trajectory ensemble with its immutable initial conditions. Trajectory i
/// draws its noise from substream `first_trajectory + i` unless explicit
/// substream ids are given.
class MapEnsemble {
public:
    MapEnsemble(std::vector<MapState> initial, std::uint64_t first_trajectory = 0);
    MapEnsemble(std::vector<MapState> initial, std::vector<std::uint64_t> noise_ids);

    static MapEnsemble from_initial_conditions(std::span<const InitialCondition> ics,
                                               std::uint64_t first_trajectory = 0);

    std::size_t size() const { return initial_.size(); }
    const std::vector<MapState>& initial() const { return initial_; }
    std::uint64_t trajectory_id(std::size_t i) const
    {
        return noise_ids_.empty() ? first_trajectory_ + i : noise_ids_[i];
    }

private:
    std::vector<MapState> initial_;
    std::uint64_t first_trajectory_ = 0;
    std::vector<std::uint64_t> noise_ids_;
};

struct EnsembleRecords {
    std::vector<MapState> initial;
    std::vector<MapState> final;
    /// history[i][s] is trajectory i after s kicks (s = 0..t); empty unless
    /// requested.
    std::vector<std::vector<MapState>> history;
};

struct EvolveOptions {
    bool keep_history = false;
};

/// Iterates every trajectory t times with the effective kick
/// |eps| k k_scale (1 + R_s).
EnsembleRecords evolve_ensemble(const MapEnsemble& ensemble, const SystemParams& params,
                                const NoiseModel& noise, int t,
                                EvolveOptions options = {});

/// Thrown by ensemble_energy at eps = 0; use resonance_limit_energy there.
class ZeroDetuningError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Per-trajectory (J_t - J_0)^2 / (2 eps^2).
std::vector<double> trajectory_energies(const EnsembleRecords& records, double epsilon);

/// Mean of trajectory_energies and its standard error.
MeanError ensemble_energy(const EnsembleRecords& records, double epsilon);

/// Zero-detuning limit of the energy:
///   (1/2) [ sum_{s=0}^{t-1} k_{s+1} sin(theta0 + s J0) ]^2
/// with `kicks` = {k_1, ..., k_t}.
double resonance_limit_energy(double theta0, double J0, std::span<const double> kicks);

/// Convenience: sample the ensemble, evolve it for params.t kicks and
/// return the energy estimate. Trajectory i uses noise substream i.
MeanError simulate_energy(const SystemParams& params, const NoiseModel& noise,
                          const InitialEnsemble& ensemble, std::uint64_t seed);

}  // namespace qkr
