#pragma once

// Exact split-step evolution of the kicked rotor on a single quasimomentum
// fiber, with per-kick amplitude noise, and the quasimomentum average.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkr/fft.hpp"
#include "qkr/model.hpp"

namespace qkr {

/// Raised when probability reaches the edge of the momentum grid.
class GridOverflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kBoundaryTolerance = 1e-8;
inline constexpr double kBoundaryFraction = 0.05;
inline constexpr std::size_t kDefaultGridSize = 1024;
inline constexpr std::size_t kMaxGridSize = std::size_t{1} << 16;

/// Probabilities over the momenta n + beta of one fiber.
struct MomentumDistribution {
    double beta = 0.0;
    std::vector<int> n;
    std::vector<double> probability;
};

/// Wave function on the momentum ladder n + beta, n in [-N/2, N/2).
/// Amplitudes are stored in FFT order: slot i holds n = i for i < N/2 and
/// n = i - N otherwise.
class QuantumState {
public:
    static QuantumState plane_wave(std::size_t grid_size, double beta, int n0 = 0);

    std::size_t size() const { return amplitudes_.size(); }
    double beta() const { return beta_; }

    int momentum_index(std::size_t slot) const;
    std::size_t slot_of(int n) const;

    std::span<std::complex<double>> amplitudes() { return amplitudes_; }
    std::span<const std::complex<double>> amplitudes() const { return amplitudes_; }

    double norm() const;
    /// Population in the outermost `fraction` of the grid on either side.
    double boundary_population(double fraction = kBoundaryFraction) const;
    /// <(n + beta)^2> / 2.
    double kinetic_energy() const;
    /// <(n - n0)^2> / 2: momentum transferred from the plane wave n0 + beta.
    double displacement_energy(int n0) const;
    MomentumDistribution distribution() const;

private:
    QuantumState(std::size_t grid_size, double beta);

    double beta_;
    ComplexBuffer amplitudes_;
};

/// One Floquet period split into its two factors for a fixed grid, fiber and
/// kick period. Precomputes the angle grid and the free-flight phases.
class FloquetPropagator {
public:
    FloquetPropagator(std::size_t grid_size, double beta, int ell, double epsilon);

    /// psi(theta) -> exp(-i k_s cos theta) psi(theta). Throws
    /// GridOverflowError if the result violates the boundary guard.
    void kick(QuantumState& state, double strength) const;
    /// a_n -> exp(-i tau (n + beta)^2 / 2) a_n.
    void free(QuantumState& state) const;

private:
    Fft fft_;
    double beta_;
    std::vector<double> cos_theta_;
    std::vector<std::complex<double>> free_phase_;
};

/// Applies a single kick of the given strength.
void kick_operator(QuantumState& state, double strength);

/// Free flight over a period tau; tau is split into 2*pi*round(tau/2pi)
/// plus a remainder so that resonant phases are reduced exactly.
void free_evolution(QuantumState& state, double tau);
void free_evolution(QuantumState& state, int ell, double epsilon);

/// Final state plus the energy change after each full kick period
/// (kick followed by free flight), energies[s] after s+1 kicks.
/// displacement[s] is <(n - n0)^2>/2 at the same times; it lacks the
/// beta <n - n0> cross term of the kinetic energy change.
struct EvolutionResult {
    QuantumState state;
    double initial_energy = 0.0;
    std::vector<double> energies;
    std::vector<double> displacement;
};

/// t periods of kick(k (1 + R_s)) then free(tau), using the noise substream
/// of `trajectory`. Displacements are measured from n0.
EvolutionResult evolve(QuantumState initial, const SystemParams& params,
                       const NoiseModel& noise, std::uint64_t trajectory, int n0 = 0);

/// As evolve() from the plane wave n0 + beta, doubling the grid from
/// `start_grid` until the boundary guard passes.
EvolutionResult evolve_adaptive(double beta, int n0, const SystemParams& params,
                                const NoiseModel& noise, std::uint64_t trajectory,
                                std::size_t start_grid = kDefaultGridSize);

/// sum P (n + beta)^2 / 2 - reference_energy.
double mean_energy(const MomentumDistribution& distribution,
                   double reference_energy);

struct BetaAverageOptions {
    InitialEnsemble ensemble{EnsembleMode::theory_uniform, 2000, 0.0,
                             BetaSampling::stratified};
    std::uint64_t seed = 1;
    std::size_t start_grid = kDefaultGridSize;
    bool collect_distribution = false;
};

/// Averages over independently evolved fibers. Sample j uses noise
/// trajectory j, so every fiber sees its own noise realization.
struct BetaAverageResult {
    std::vector<double> energy_per_kick;
    std::vector<double> std_error_per_kick;
    double energy = 0.0;  // after the final kick
    double std_error = 0.0;
    double initial_energy = 0.0;  // mean of (n0 + beta)^2 / 2
    double initial_energy_std_error = 0.0;
    double final_energy = 0.0;  // absolute <(n + beta)^2> / 2 after t kicks
    double final_energy_std_error = 0.0;
    std::vector<double> displacement_per_kick;
    std::vector<double> displacement_std_error_per_kick;
    double displacement = 0.0;
    double displacement_std_error = 0.0;
    std::size_t samples = 0;
    std::size_t largest_grid = 0;
    /// Probability of the momentum lying in [n, n+1), averaged over samples.
    std::map<int, double> averaged_distribution;
};

BetaAverageResult beta_average(const SystemParams& params, const NoiseModel& noise,
                               const BetaAverageOptions& options);

}  // namespace qkr
