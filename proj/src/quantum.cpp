#include "qkr/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qkr/parallel.hpp"
#include "qkr/stats.hpp"

namespace qkr {

namespace {

// Plain complex product; std::complex operator* routes through the
// NaN-recovering __muldc3 path, which dominates the propagation cost.
inline std::complex<double> times(std::complex<double> a, std::complex<double> b)
{
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

bool is_power_of_two(std::size_t n)
{
    return n >= 2 && (n & (n - 1)) == 0;
}

/// Free-flight phase tau (n + beta)^2 / 2 modulo 2pi with tau = 2 pi ell + eps.
/// The resonant part pi*ell*(n + beta)^2 is reduced with integer arithmetic
/// so that exact resonances stay exact on large grids.
double free_phase(int n, double beta, int ell, double epsilon)
{
    const long long nn = n;
    const long long ell_n2 = static_cast<long long>(ell) * nn * nn;
    double phase = (ell_n2 % 2 == 0) ? 0.0 : kPi;
    const double cross = static_cast<double>(ell) * static_cast<double>(n) * beta;
    phase += kTwoPi * (cross - std::floor(cross));
    phase += kPi * ell * beta * beta;
    const double p = n + beta;
    phase += 0.5 * epsilon * p * p;
    return phase;
}

}  // namespace

QuantumState::QuantumState(std::size_t grid_size, double beta)
    : beta_(beta), amplitudes_(grid_size)
{
}

QuantumState QuantumState::plane_wave(std::size_t grid_size, double beta, int n0)
{
    if (!is_power_of_two(grid_size)) {
        throw ParameterError("momentum grid size must be a power of two");
    }
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw ParameterError("quasimomentum must lie in [0, 1)");
    }
    const auto half = static_cast<long long>(grid_size / 2);
    if (n0 < -half || n0 >= half) {
        throw GridOverflowError("initial momentum lies outside the grid");
    }
    QuantumState state(grid_size, beta);
    state.amplitudes_[state.slot_of(n0)] = 1.0;
    return state;
}

int QuantumState::momentum_index(std::size_t slot) const
{
    const auto n = size();
    return slot < n / 2 ? static_cast<int>(slot)
                        : static_cast<int>(slot) - static_cast<int>(n);
}

std::size_t QuantumState::slot_of(int n) const
{
    const auto grid = static_cast<long long>(size());
    long long slot = n;
    if (slot < 0) {
        slot += grid;
    }
    return static_cast<std::size_t>(slot);
}

double QuantumState::norm() const
{
    double sum = 0.0;
    for (const auto& a : amplitudes_) {
        sum += std::norm(a);
    }
    return sum;
}

double QuantumState::boundary_population(double fraction) const
{
    const auto n = size();
    const auto band = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    double sum = 0.0;
    // slots [N/2 - band, N/2 + band) hold the largest |n| on both sides
    for (std::size_t i = n / 2 - band; i < n / 2 + band; ++i) {
        sum += std::norm(amplitudes_[i]);
    }
    return sum;
}

double QuantumState::kinetic_energy() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double p = momentum_index(i) + beta_;
        sum += std::norm(amplitudes_[i]) * p * p;
    }
    return 0.5 * sum;
}

double QuantumState::displacement_energy(int n0) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double d = momentum_index(i) - n0;
        sum += std::norm(amplitudes_[i]) * d * d;
    }
    return 0.5 * sum;
}

MomentumDistribution QuantumState::distribution() const
{
    MomentumDistribution out;
    out.beta = beta_;
    const auto n = size();
    out.n.reserve(n);
    out.probability.reserve(n);
    // ascending momentum: slots N/2 .. N-1 then 0 .. N/2-1
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t slot = (k + n / 2) % n;
        out.n.push_back(momentum_index(slot));
        out.probability.push_back(std::norm(amplitudes_[slot]));
    }
    return out;
}

FloquetPropagator::FloquetPropagator(std::size_t grid_size, double beta, int ell,
                                     double epsilon)
    : fft_(grid_size), beta_(beta), cos_theta_(grid_size), free_phase_(grid_size)
{
    if (!is_power_of_two(grid_size)) {
        throw ParameterError("momentum grid size must be a power of two");
    }
    const double step = kTwoPi / static_cast<double>(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
        cos_theta_[j] = std::cos(step * static_cast<double>(std::min(j, grid_size - j)));
    }
    const auto half = grid_size / 2;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const int n = i < half ? static_cast<int>(i)
                               : static_cast<int>(i) - static_cast<int>(grid_size);
        free_phase_[i] = std::polar(1.0, -free_phase(n, beta, ell, epsilon));
    }
}

void FloquetPropagator::kick(QuantumState& state, double strength) const
{
    if (state.size() != cos_theta_.size()) {
        throw ParameterError("state grid does not match the propagator");
    }
    if (strength == 0.0) {
        return;
    }
    auto amps = state.amplitudes();
    fft_.inverse(amps);
    const std::size_t n = amps.size();
    const double scale = 1.0 / static_cast<double>(n);
    // cos(theta_j) = cos(theta_{N-j}): one phase serves both points
    for (std::size_t j = 0; j <= n / 2; ++j) {
        const double phase = strength * cos_theta_[j];
        const std::complex<double> factor(std::cos(phase) * scale,
                                          -std::sin(phase) * scale);
        amps[j] = times(amps[j], factor);
        if (j != 0 && j != n / 2) {
            amps[n - j] = times(amps[n - j], factor);
        }
    }
    fft_.forward(amps);
    const double edge = state.boundary_population();
    if (edge > kBoundaryTolerance) {
        throw GridOverflowError("population " + std::to_string(edge) +
                                " at the grid edge exceeds the guard for N = " +
                                std::to_string(state.size()));
    }
}

void FloquetPropagator::free(QuantumState& state) const
{
    if (state.size() != free_phase_.size()) {
        throw ParameterError("state grid does not match the propagator");
    }
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        amps[i] = times(amps[i], free_phase_[i]);
    }
}

void kick_operator(QuantumState& state, double strength)
{
    const FloquetPropagator propagator(state.size(), state.beta(), 0, 0.0);
    propagator.kick(state, strength);
}

void free_evolution(QuantumState& state, int ell, double epsilon)
{
    const FloquetPropagator propagator(state.size(), state.beta(), ell, epsilon);
    propagator.free(state);
}

void free_evolution(QuantumState& state, double tau)
{
    const int ell = static_cast<int>(std::lround(tau / kTwoPi));
    free_evolution(state, ell, tau - kTwoPi * ell);
}

EvolutionResult evolve(QuantumState initial, const SystemParams& params,
                       const NoiseModel& noise, std::uint64_t trajectory, int n0)
{
    params.validate();
    const FloquetPropagator propagator(initial.size(), initial.beta(), params.ell,
                                       params.epsilon);
    EvolutionResult result{std::move(initial), 0.0, {}, {}};
    result.initial_energy = result.state.kinetic_energy();
    result.energies.reserve(static_cast<std::size_t>(params.t));
    result.displacement.reserve(static_cast<std::size_t>(params.t));
    const double k = params.k * noise.k_scale(trajectory);
    for (int s = 0; s < params.t; ++s) {
        const double r = noise.kick_factor(trajectory, static_cast<std::uint32_t>(s));
        propagator.kick(result.state, k * (1.0 + r));
        propagator.free(result.state);
        result.energies.push_back(result.state.kinetic_energy() - result.initial_energy);
        result.displacement.push_back(result.state.displacement_energy(n0));
    }
    return result;
}

EvolutionResult evolve_adaptive(double beta, int n0, const SystemParams& params,
                                const NoiseModel& noise, std::uint64_t trajectory,
                                std::size_t start_grid)
{
    for (std::size_t grid = start_grid;; grid *= 2) {
        try {
            return evolve(QuantumState::plane_wave(grid, beta, n0), params, noise,
                          trajectory, n0);
        } catch (const GridOverflowError&) {
            if (grid >= kMaxGridSize) {
                throw;
            }
        }
    }
}

double mean_energy(const MomentumDistribution& distribution, double reference_energy)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < distribution.n.size(); ++i) {
        const double p = distribution.n[i] + distribution.beta;
        sum += distribution.probability[i] * p * p;
    }
    return 0.5 * sum - reference_energy;
}

BetaAverageResult beta_average(const SystemParams& params, const NoiseModel& noise,
                               const BetaAverageOptions& options)
{
    params.validate();
    if (options.ensemble.size < 1) {
        throw ParameterError("n_beta must be >= 1");
    }
    const auto initial = sample_initial_conditions(options.ensemble, params, options.seed);
    const std::size_t samples = initial.size();
    const auto kicks = static_cast<std::size_t>(params.t);

    // sample-major table of energies, one row of t values per fiber
    std::vector<double> energies(samples * kicks);
    std::vector<double> displacements(samples * kicks);
    std::vector<double> initial_energies(samples);
    std::vector<std::size_t> grids(samples);

    constexpr std::size_t kBlock = 32;
    const std::size_t blocks = (samples + kBlock - 1) / kBlock;
    std::vector<std::map<int, double>> partial(options.collect_distribution ? blocks : 0);

    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * kBlock;
        const std::size_t end = std::min(samples, begin + kBlock);
        for (std::size_t j = begin; j < end; ++j) {
            const auto& ic = initial[j];
            auto run = evolve_adaptive(ic.beta, ic.n0, params, noise, j, options.start_grid);
            std::copy(run.energies.begin(), run.energies.end(),
                      energies.begin() + static_cast<std::ptrdiff_t>(j * kicks));
            std::copy(run.displacement.begin(), run.displacement.end(),
                      displacements.begin() + static_cast<std::ptrdiff_t>(j * kicks));
            initial_energies[j] = run.initial_energy;
            grids[j] = run.state.size();
            if (options.collect_distribution) {
                const auto dist = run.state.distribution();
                for (std::size_t i = 0; i < dist.n.size(); ++i) {
                    if (dist.probability[i] > 0.0) {
                        partial[b][dist.n[i]] += dist.probability[i];
                    }
                }
            }
        }
    });

    BetaAverageResult out;
    out.samples = samples;
    out.largest_grid = *std::max_element(grids.begin(), grids.end());
    out.energy_per_kick.resize(kicks);
    out.std_error_per_kick.resize(kicks);
    out.displacement_per_kick.resize(kicks);
    out.displacement_std_error_per_kick.resize(kicks);
    for (std::size_t s = 0; s < kicks; ++s) {
        const auto me = strided_mean_and_stderr(energies, s, kicks);
        out.energy_per_kick[s] = me.mean;
        out.std_error_per_kick[s] = me.std_error;
        const auto md = strided_mean_and_stderr(displacements, s, kicks);
        out.displacement_per_kick[s] = md.mean;
        out.displacement_std_error_per_kick[s] = md.std_error;
    }
    if (kicks > 0) {
        out.energy = out.energy_per_kick.back();
        out.std_error = out.std_error_per_kick.back();
        out.displacement = out.displacement_per_kick.back();
        out.displacement_std_error = out.displacement_std_error_per_kick.back();
    }
    const auto e0 = mean_and_stderr(initial_energies);
    out.initial_energy = e0.mean;
    out.initial_energy_std_error = e0.std_error;
    std::vector<double> finals(initial_energies);
    if (kicks > 0) {
        for (std::size_t j = 0; j < samples; ++j) {
            finals[j] += energies[j * kicks + kicks - 1];
        }
    }
    const auto ef = mean_and_stderr(finals);
    out.final_energy = ef.mean;
    out.final_energy_std_error = ef.std_error;
    if (options.collect_distribution) {
        for (const auto& block : partial) {
            for (const auto& [n, p] : block) {
                out.averaged_distribution[n] += p;
            }
        }
        for (auto& [n, p] : out.averaged_distribution) {
            p /= static_cast<double>(samples);
        }
    }
    return out;
}

}  // namespace qkr
