#include "qkr/model.hpp"

#include <cmath>
#include <numeric>

#include "qkr/philox.hpp"

namespace qkr {

double SystemParams::scaled_kick() const
{
    return std::abs(epsilon) * k;
}

bool SystemParams::pseudo_classical_valid() const
{
    return std::abs(epsilon) <= kPseudoClassicalCutoff;
}

void SystemParams::validate() const
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ParameterError("kick strength k must be positive and finite");
    }
    if (t < 0) {
        throw ParameterError("kick count t must be non-negative");
    }
    if (ell < 1) {
        throw ParameterError("resonance order ell must be >= 1");
    }
    if (!std::isfinite(epsilon) || !(tau() > 0.0)) {
        throw ParameterError("kick period tau = 2*pi*ell + epsilon must be positive");
    }
}

SystemParams SystemParams::from_tau(double k, int t, int ell, double tau)
{
    SystemParams params{k, t, ell, tau - kTwoPi * ell};
    params.validate();
    return params;
}

double LabUnits::effective_recoil_frequency() const
{
    if (recoil_frequency != 0.0) {
        return recoil_frequency;
    }
    if (!(wavenumber > 0.0) || !(mass > 0.0)) {
        return 0.0;
    }
    return kHbar * wavenumber * wavenumber / (2.0 * mass);
}

double tau_from_lab(const LabUnits& units)
{
    if (!(units.pulse_period > 0.0)) {
        throw ParameterError("pulse period T must be positive");
    }
    const double omega_r = units.effective_recoil_frequency();
    if (!(omega_r > 0.0)) {
        throw ParameterError(
            "recoil frequency must be positive (give it directly or via k_L and M)");
    }
    const double tau = 8.0 * omega_r * units.pulse_period;
    if (!std::isfinite(tau)) {
        throw ParameterError("scaled period is not finite");
    }
    return tau;
}

NoiseModel::NoiseModel(double level, std::uint64_t master_seed, double k_jitter)
    : level_(level), master_seed_(master_seed), k_jitter_(k_jitter)
{
    if (!(level >= 0.0 && level <= 2.0)) {
        throw ParameterError("noise level L must lie in [0, 2]");
    }
    if (!(k_jitter >= 0.0 && k_jitter < 2.0)) {
        throw ParameterError("k jitter width must lie in [0, 2)");
    }
}

std::pair<double, double> NoiseModel::uniform_pair(Stream stream,
                                                   std::uint64_t trajectory,
                                                   std::uint32_t index) const
{
    const PhiloxCounter ctr{index, static_cast<std::uint32_t>(stream),
                            static_cast<std::uint32_t>(trajectory),
                            static_cast<std::uint32_t>(trajectory >> 32)};
    const PhiloxKey key{static_cast<std::uint32_t>(master_seed_),
                        static_cast<std::uint32_t>(master_seed_ >> 32)};
    const auto out = philox4x32_10(ctr, key);
    return {to_unit_double(out[0], out[1]), to_unit_double(out[2], out[3])};
}

double NoiseModel::uniform(Stream stream, std::uint64_t trajectory,
                           std::uint32_t index) const
{
    return uniform_pair(stream, trajectory, index).first;
}

std::pair<double, double> NoiseModel::kick_factor_pair(std::uint64_t trajectory,
                                                      std::uint32_t block) const
{
    if (level_ == 0.0) {
        return {0.0, 0.0};
    }
    const auto [u, v] = uniform_pair(Stream::kick_noise, trajectory, block);
    return {level_ * (u - 0.5), level_ * (v - 0.5)};
}

double NoiseModel::kick_factor(std::uint64_t trajectory, std::uint32_t kick) const
{
    const auto pair = kick_factor_pair(trajectory, kick / 2);
    return kick % 2 == 0 ? pair.first : pair.second;
}

double NoiseModel::k_scale(std::uint64_t trajectory) const
{
    if (k_jitter_ == 0.0) {
        return 1.0;
    }
    return 1.0 + k_jitter_ * (uniform(Stream::k_jitter, trajectory, 0) - 0.5);
}

NoiseModel NoiseModel::with_level(double level) const
{
    return NoiseModel(level, master_seed_, k_jitter_);
}

double draw_kick_factor(const NoiseModel& noise, std::uint64_t trajectory,
                        std::uint32_t kick)
{
    return noise.kick_factor(trajectory, kick);
}

double scaled_momentum(int n, double beta, const SystemParams& params)
{
    return std::abs(params.epsilon) * n + kPi * params.ell + params.tau() * beta;
}

double wrap_angle(double theta)
{
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod of a tiny negative number can round back up to exactly 2pi
    return r >= kTwoPi ? 0.0 : r;
}

double scaled_angle(double z, double epsilon)
{
    const double sign = epsilon > 0.0 ? 1.0 : (epsilon < 0.0 ? -1.0 : 0.0);
    return wrap_angle(z + kPi * (1.0 - sign) / 2.0);
}

namespace {

// Multiplier coprime to n closest to n / golden ratio; (i * stride) mod n is
// then a permutation with good two-dimensional spread (a Fibonacci-like
// rank-1 lattice).
std::size_t lattice_stride(std::size_t n)
{
    if (n < 3) {
        return 1;
    }
    const auto target = static_cast<std::size_t>(std::llround(
        static_cast<double>(n) / std::numbers::phi));
    for (std::size_t d = 0; d < n; ++d) {
        for (const std::size_t c : {target + d, target - d}) {
            if (c >= 1 && c < n && std::gcd(c, n) == 1) {
                return c;
            }
        }
    }
    return 1;
}

}  // namespace

std::vector<InitialCondition> sample_initial_conditions(
    const InitialEnsemble& ensemble, const SystemParams& params,
    std::uint64_t seed)
{
    if (ensemble.size < 1) {
        throw ParameterError("ensemble size must be >= 1");
    }
    if (ensemble.mode == EnsembleMode::experiment_gaussian &&
        !(ensemble.sigma_p >= 0.0)) {
        throw ParameterError("momentum width sigma_p must be non-negative");
    }
    params.validate();

    const NoiseModel source(0.0, seed);
    const auto n = ensemble.size;
    const auto stride = lattice_stride(n);
    std::vector<InitialCondition> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [u_theta, u_beta] =
            source.uniform_pair(Stream::initial_conditions, i, 0);
        InitialCondition& ic = out[i];
        ic.theta0 = kTwoPi * u_theta;
        if (ensemble.mode == EnsembleMode::theory_uniform) {
            if (ensemble.beta_sampling == BetaSampling::stratified) {
                // Latin hypercube: sample i owns beta stratum i and theta
                // stratum (i * stride) mod N
                const auto theta_cell = static_cast<double>((i * stride) % n);
                ic.theta0 = kTwoPi * (theta_cell + u_theta) / static_cast<double>(n);
                ic.beta = (static_cast<double>(i) + u_beta) / static_cast<double>(n);
            } else {
                ic.beta = u_beta;
            }
            ic.n0 = 0;
        } else {
            // Box-Muller on a second block of the same substream
            const auto [u1, u2] =
                source.uniform_pair(Stream::initial_conditions, i, 1);
            const double radius = std::sqrt(-2.0 * std::log1p(-u1));
            const double p = ensemble.sigma_p * radius * std::cos(kTwoPi * u2);
            const double floor_p = std::floor(p);
            ic.n0 = static_cast<int>(floor_p);
            ic.beta = p - floor_p;
            if (ic.beta >= 1.0) {
                ic.beta = 0.0;
                ++ic.n0;
            }
        }
        ic.J0 = scaled_momentum(ic.n0, ic.beta, params);
    }
    return out;
}

std::string to_string(EnsembleMode mode)
{
    return mode == EnsembleMode::theory_uniform ? "theory" : "experiment";
}

std::string to_string(BetaSampling sampling)
{
    return sampling == BetaSampling::random ? "random" : "stratified";
}

}  // namespace qkr
