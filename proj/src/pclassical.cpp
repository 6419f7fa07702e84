#include "qkr/pclassical.hpp"

#include <cmath>

#include "qkr/parallel.hpp"

namespace qkr {

namespace {

constexpr double kInvTwoPi = 1.0 / kTwoPi;

inline double reduce_angle(double x)
{
    double r = x - kTwoPi * std::floor(x * kInvTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    if (r >= kTwoPi) {
        r -= kTwoPi;
    }
    return r;
}

inline MapState step(MapState s, double kick)
{
    const double theta = reduce_angle(s.theta + s.J);
    return {theta, s.J + kick * std::sin(theta)};
}

}  // namespace

MapState map_step(MapState state, double effective_kick)
{
    return step(state, effective_kick);
}

MapState map_step_inverse(MapState state, double effective_kick)
{
    const double J = state.J - effective_kick * std::sin(state.theta);
    return {reduce_angle(state.theta - J), J};
}

MapEnsemble::MapEnsemble(std::vector<MapState> initial, std::uint64_t first_trajectory)
    : initial_(std::move(initial)), first_trajectory_(first_trajectory)
{
    if (initial_.empty()) {
        throw ParameterError("a map ensemble needs at least one trajectory");
    }
    for (auto& s : initial_) {
        if (!std::isfinite(s.theta) || !std::isfinite(s.J)) {
            throw ParameterError("initial conditions must be finite");
        }
        s.theta = reduce_angle(s.theta);
    }
}

MapEnsemble::MapEnsemble(std::vector<MapState> initial, std::vector<std::uint64_t> noise_ids)
    : MapEnsemble(std::move(initial), 0)
{
    if (noise_ids.size() != initial_.size()) {
        throw ParameterError("one noise substream id per trajectory is required");
    }
    noise_ids_ = std::move(noise_ids);
}

MapEnsemble MapEnsemble::from_initial_conditions(std::span<const InitialCondition> ics,
                                                 std::uint64_t first_trajectory)
{
    std::vector<MapState> states;
    states.reserve(ics.size());
    for (const auto& ic : ics) {
        states.push_back({ic.theta0, ic.J0});
    }
    return MapEnsemble(std::move(states), first_trajectory);
}

EnsembleRecords evolve_ensemble(const MapEnsemble& ensemble, const SystemParams& params,
                                const NoiseModel& noise, int t, EvolveOptions options)
{
    if (t < 0) {
        throw ParameterError("kick count must be non-negative");
    }
    params.validate();
    const std::size_t n = ensemble.size();
    EnsembleRecords records;
    records.initial = ensemble.initial();
    records.final.resize(n);
    if (options.keep_history) {
        records.history.resize(n);
    }
    const double base_kick = params.scaled_kick();
    const bool noisy = noise.level() > 0.0;

    // kick-major within a block: independent trajectories interleave, so the
    // angle -> sin -> momentum dependency chains overlap
    parallel_blocks(n, 1024, [&](std::size_t begin, std::size_t end) {
        const std::size_t width = end - begin;
        std::vector<double> kick(width);
        std::vector<std::uint64_t> id(width);
        for (std::size_t j = 0; j < width; ++j) {
            id[j] = ensemble.trajectory_id(begin + j);
            kick[j] = base_kick * noise.k_scale(id[j]);
            records.final[begin + j] = records.initial[begin + j];
            if (options.keep_history) {
                records.history[begin + j].reserve(static_cast<std::size_t>(t) + 1);
                records.history[begin + j].push_back(records.initial[begin + j]);
            }
        }
        MapState* state = records.final.data() + begin;
        std::vector<double> odd(noisy ? width : 0);
        for (int k = 0; k < t; ++k) {
            const auto block = static_cast<std::uint32_t>(k / 2);
            for (std::size_t j = 0; j < width; ++j) {
                double r = 0.0;
                if (noisy) {
                    if (k % 2 == 0) {
                        const auto pair = noise.kick_factor_pair(id[j], block);
                        r = pair.first;
                        odd[j] = pair.second;
                    } else {
                        r = odd[j];
                    }
                }
                state[j] = step(state[j], kick[j] * (1.0 + r));
            }
            if (options.keep_history) {
                for (std::size_t j = 0; j < width; ++j) {
                    records.history[begin + j].push_back(state[j]);
                }
            }
        }
    });
    return records;
}

std::vector<double> trajectory_energies(const EnsembleRecords& records, double epsilon)
{
    if (epsilon == 0.0) {
        throw ZeroDetuningError(
            "energy from J needs eps != 0; use resonance_limit_energy at resonance");
    }
    const double scale = 1.0 / (2.0 * epsilon * epsilon);
    std::vector<double> out(records.final.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = records.final[i].J - records.initial[i].J;
        out[i] = scale * d * d;
    }
    return out;
}

MeanError ensemble_energy(const EnsembleRecords& records, double epsilon)
{
    const auto energies = trajectory_energies(records, epsilon);
    return mean_and_stderr(energies);
}

double resonance_limit_energy(double theta0, double J0, std::span<const double> kicks)
{
    double sum = 0.0;
    for (std::size_t s = 0; s < kicks.size(); ++s) {
        sum += kicks[s] * std::sin(theta0 + static_cast<double>(s) * J0);
    }
    return 0.5 * sum * sum;
}

MeanError simulate_energy(const SystemParams& params, const NoiseModel& noise,
                          const InitialEnsemble& ensemble, std::uint64_t seed)
{
    const auto ics = sample_initial_conditions(ensemble, params, seed);
    const auto records = evolve_ensemble(MapEnsemble::from_initial_conditions(ics),
                                         params, noise, params.t);
    return ensemble_energy(records, params.epsilon);
}

}  // namespace qkr
