#pragma once

// Physical parameters, unit conversion, the amplitude-noise source and the
// initial-condition sampler shared by every engine.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qkr {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Thrown for any physically meaningless parameter combination.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Largest |epsilon| for which the pseudo-classical description is trusted.
inline constexpr double kPseudoClassicalCutoff = 0.15;

/// Dimensionless kicked-rotor parameters. The kick period is derived from
/// the resonance order and the detuning: tau = 2*pi*ell + epsilon.
struct SystemParams {
    double k = 2.8;
    int t = 20;
    int ell = 2;
    double epsilon = 0.0;

    double tau() const { return kTwoPi * ell + epsilon; }

    /// Effective kick strength of the pseudo-classical map, |epsilon| * k.
    double scaled_kick() const;

    bool pseudo_classical_valid() const;

    /// Throws ParameterError unless k > 0, t >= 0, ell >= 1 and tau > 0.
    void validate() const;

    static SystemParams from_tau(double k, int t, int ell, double tau);
};

/// Laboratory quantities. When recoil_frequency is zero it is derived
/// from the wavenumber and mass as hbar*k_L^2 / (2M).
struct LabUnits {
    double recoil_frequency = 0.0;  // rad/s
    double pulse_period = 0.0;      // s
    double wavenumber = 0.0;        // 1/m
    double mass = 0.0;              // kg

    double effective_recoil_frequency() const;
};

inline constexpr double kHbar = 1.054571817e-34;

/// Scaled kicking period tau = 8 * omega_r * T.
double tau_from_lab(const LabUnits& units);

/// Independent substreams of the counter-based generator. The tag is part
/// of the counter, so streams never overlap.
enum class Stream : std::uint32_t {
    kick_noise = 0,
    initial_conditions = 1,
    k_jitter = 2,
    shot = 3,
    sweep_sampling = 4,
};

/// Amplitude noise R_s uniform on [-L/2, L/2], drawn statelessly from
/// (master seed, stream, trajectory, index). The same triple always gives
/// the same value, independent of evaluation order or thread.
///
/// The optional k-jitter multiplies the kick strength of each trajectory by
/// a constant factor uniform on [1 - w/2, 1 + w/2]; w = 0 disables it.
class NoiseModel {
public:
    NoiseModel() = default;
    NoiseModel(double level, std::uint64_t master_seed, double k_jitter = 0.0);

    double level() const { return level_; }
    std::uint64_t master_seed() const { return master_seed_; }
    double k_jitter() const { return k_jitter_; }

    /// Uniform on [0, 1).
    double uniform(Stream stream, std::uint64_t trajectory,
                   std::uint32_t index) const;
    /// Two independent uniforms on [0, 1) from one generator block.
    std::pair<double, double> uniform_pair(Stream stream,
                                           std::uint64_t trajectory,
                                           std::uint32_t index) const;

    /// R for the given kick of the given trajectory. Kicks 2b and 2b+1
    /// share generator block b.
    double kick_factor(std::uint64_t trajectory, std::uint32_t kick) const;
    /// R for kicks 2 * block and 2 * block + 1.
    std::pair<double, double> kick_factor_pair(std::uint64_t trajectory,
                                               std::uint32_t block) const;

    /// Per-trajectory multiplicative k factor (1 when jitter is off).
    double k_scale(std::uint64_t trajectory) const;

    /// Same noise source with a different level; the underlying uniforms are
    /// shared, which gives common-random-number comparisons across L.
    NoiseModel with_level(double level) const;

private:
    double level_ = 0.0;
    std::uint64_t master_seed_ = 0;
    double k_jitter_ = 0.0;
};

/// Kick-noise draw; see NoiseModel::kick_factor.
double draw_kick_factor(const NoiseModel& noise, std::uint64_t trajectory,
                        std::uint32_t kick);

enum class EnsembleMode { theory_uniform, experiment_gaussian };

/// How quasimomenta are placed on [0, 1) in theory mode. `stratified`
/// draws sample j uniformly inside [j/N, (j+1)/N), so every sample is still
/// marginally uniform while the ensemble covers the interval evenly.
enum class BetaSampling { random, stratified };

struct InitialEnsemble {
    EnsembleMode mode = EnsembleMode::theory_uniform;
    std::size_t size = 1;
    double sigma_p = 0.0;  // standard deviation of p, experiment mode only
    BetaSampling beta_sampling = BetaSampling::random;
};

/// One sampled initial condition. `n0` is the integer part of the initial
/// momentum (always 0 in theory mode), so p0 = n0 + beta.
struct InitialCondition {
    double theta0 = 0.0;
    double J0 = 0.0;
    double beta = 0.0;
    int n0 = 0;
};

/// J = |eps| * n + pi*ell + tau*beta.
double scaled_momentum(int n, double beta, const SystemParams& params);

/// theta = z + pi(1 - sign eps)/2 reduced to [0, 2pi).
double scaled_angle(double z, double epsilon);

/// Reduces an angle to [0, 2pi).
double wrap_angle(double theta);

std::vector<InitialCondition> sample_initial_conditions(
    const InitialEnsemble& ensemble, const SystemParams& params,
    std::uint64_t seed);

std::string to_string(EnsembleMode mode);
std::string to_string(BetaSampling sampling);

}  // namespace qkr
