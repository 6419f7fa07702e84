#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qkr/model.hpp"
#include "qkr/philox.hpp"

using namespace qkr;

TEST_CASE("philox known-answer vectors")
{
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
          PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit doubles cover [0, 1)")
{
    CHECK(to_unit_double(0, 0) == 0.0);
    const double top = to_unit_double(0xffffffffu, 0xffffffffu);
    CHECK(top < 1.0);
    CHECK(top == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("system parameters")
{
    const SystemParams p{2.8, 20, 2, 0.01};
    CHECK(p.tau() == doctest::Approx(4 * kPi + 0.01));
    CHECK(p.scaled_kick() == doctest::Approx(0.028));
    CHECK(SystemParams{2.8, 20, 2, -0.01}.scaled_kick() == doctest::Approx(0.028));
    CHECK(p.pseudo_classical_valid());
    CHECK_FALSE(SystemParams{2.8, 20, 2, 0.2}.pseudo_classical_valid());
    CHECK_NOTHROW((SystemParams{2.8, 0, 1, 0.0}.validate()));
    CHECK_THROWS_AS((SystemParams{0.0, 20, 2, 0.0}.validate()), ParameterError);
    CHECK_THROWS_AS((SystemParams{2.8, -1, 2, 0.0}.validate()), ParameterError);
    CHECK_THROWS_AS((SystemParams{2.8, 20, 0, 0.0}.validate()), ParameterError);
    CHECK_THROWS_AS((SystemParams{2.8, 20, 1, -7.0}.validate()), ParameterError);

    const auto q = SystemParams::from_tau(2.8, 20, 2, 4 * kPi - 0.05);
    CHECK(q.epsilon == doctest::Approx(-0.05));
}

TEST_CASE("lab units to kick period")
{
    LabUnits units;
    units.pulse_period = 58e-6;
    units.recoil_frequency = 4 * kPi / (8 * units.pulse_period);
    CHECK(tau_from_lab(units) == doctest::Approx(4 * kPi).epsilon(1e-14));

    LabUnits doubled = units;
    doubled.pulse_period *= 2;
    CHECK(tau_from_lab(doubled) == doctest::Approx(2 * tau_from_lab(units)).epsilon(1e-14));

    LabUnits zero = units;
    zero.pulse_period = 0.0;
    CHECK_THROWS_AS(tau_from_lab(zero), ParameterError);

    // recoil frequency derived from wavenumber and mass
    LabUnits derived;
    derived.pulse_period = 1e-5;
    derived.wavenumber = 2 * kPi / 852e-9;
    derived.mass = 2.2e-25;
    const double omega = kHbar * derived.wavenumber * derived.wavenumber / (2 * derived.mass);
    CHECK(tau_from_lab(derived) == doctest::Approx(8 * omega * 1e-5).epsilon(1e-14));
    derived.mass = -1.0;
    CHECK_THROWS_AS(tau_from_lab(derived), ParameterError);
}

TEST_CASE("kick factors")
{
    SUBCASE("zero level draws zero")
    {
        const NoiseModel quiet(0.0, 42);
        for (std::uint32_t s = 0; s < 50; ++s) {
            CHECK(draw_kick_factor(quiet, 3, s) == 0.0);
        }
    }
    SUBCASE("reproducible")
    {
        const NoiseModel noise(1.5, 42);
        CHECK(draw_kick_factor(noise, 7, 3) == draw_kick_factor(noise, 7, 3));
        CHECK(draw_kick_factor(noise, 7, 3) == NoiseModel(1.5, 42).kick_factor(7, 3));
        CHECK(draw_kick_factor(noise, 7, 3) != draw_kick_factor(noise, 7, 4));
        CHECK(draw_kick_factor(noise, 7, 3) != draw_kick_factor(noise, 8, 3));
        CHECK(draw_kick_factor(noise, 7, 3) != NoiseModel(1.5, 43).kick_factor(7, 3));
    }
    SUBCASE("pairs agree with single draws")
    {
        const NoiseModel noise(2.0, 9);
        const auto pair = noise.kick_factor_pair(11, 5);
        CHECK(pair.first == noise.kick_factor(11, 10));
        CHECK(pair.second == noise.kick_factor(11, 11));
    }
    SUBCASE("support at L = 2")
    {
        const NoiseModel noise(2.0, 5);
        double lo = 1.0, hi = -1.0;
        for (std::uint64_t i = 0; i < 1000000; ++i) {
            const double r = noise.kick_factor(i / 1000, static_cast<std::uint32_t>(i % 1000));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(lo >= -1.0);
        CHECK(hi <= 1.0);
        CHECK(lo < -0.9999);
        CHECK(hi > 0.9999);
    }
    SUBCASE("levels share their uniforms")
    {
        const NoiseModel base(1.0, 77);
        const auto scaled = base.with_level(2.0);
        for (std::uint32_t s = 0; s < 20; ++s) {
            CHECK(scaled.kick_factor(4, s) == doctest::Approx(2.0 * base.kick_factor(4, s)));
        }
    }
    SUBCASE("invalid levels")
    {
        CHECK_THROWS_AS(NoiseModel(-0.1, 1), ParameterError);
        CHECK_THROWS_AS(NoiseModel(2.1, 1), ParameterError);
    }
}

TEST_CASE("noise moments")
{
    for (double L : {0.5, 1.0, 2.0}) {
        CAPTURE(L);
        const NoiseModel noise(L, 2024);
        const std::size_t n = 1000000;
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = noise.kick_factor(i / 100, static_cast<std::uint32_t>(i % 100));
            s1 += r;
            s2 += r * r;
            s4 += r * r * r * r;
        }
        const double m1 = s1 / n;
        const double m2 = s2 / n;
        const double sd = L / std::sqrt(12.0);
        CHECK(std::fabs(m1) < 4 * sd / std::sqrt(double(n)));
        const double var_r2 = s4 / n - m2 * m2;
        CHECK(std::fabs(m2 - L * L / 12) < 4 * std::sqrt(var_r2 / n));
    }
}

TEST_CASE("kick factors are uncorrelated across substreams and kicks")
{
    const NoiseModel noise(2.0, 31);
    const std::size_t n = 200000;
    double same_traj = 0.0, same_kick = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        same_traj += noise.kick_factor(i, 0) * noise.kick_factor(i, 1);
        same_kick += noise.kick_factor(i, 2) * noise.kick_factor(i + n, 2);
    }
    const double var = 4.0 / 12.0;
    CHECK(std::fabs(same_traj / n / var) < 4 / std::sqrt(double(n)));
    CHECK(std::fabs(same_kick / n / var) < 4 / std::sqrt(double(n)));
}

TEST_CASE("k jitter")
{
    const NoiseModel off(1.0, 3);
    CHECK(off.k_scale(12) == 1.0);
    const NoiseModel on(1.0, 3, 0.2);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        CHECK(on.k_scale(i) >= 0.9);
        CHECK(on.k_scale(i) <= 1.1);
    }
    CHECK(on.k_scale(5) == on.k_scale(5));
}

TEST_CASE("angle and momentum conversions")
{
    CHECK(wrap_angle(-0.5) == doctest::Approx(kTwoPi - 0.5));
    CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - kTwoPi));
    CHECK(scaled_angle(1.0, 0.1) == doctest::Approx(1.0));
    CHECK(scaled_angle(1.0, -0.1) == doctest::Approx(1.0 + kPi));
    const SystemParams p{2.8, 20, 2, -0.02};
    CHECK(scaled_momentum(3, 0.25, p) ==
          doctest::Approx(0.02 * 3 + 2 * kPi + p.tau() * 0.25));
}

TEST_CASE("initial conditions")
{
    const SystemParams p{2.8, 20, 2, 0.01};

    SUBCASE("reproducible small ensemble")
    {
        const InitialEnsemble e{EnsembleMode::theory_uniform, 4};
        const auto a = sample_initial_conditions(e, p, 99);
        const auto b = sample_initial_conditions(e, p, 99);
        REQUIRE(a.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(a[i].theta0 == b[i].theta0);
            CHECK(a[i].J0 == b[i].J0);
            CHECK(a[i].beta == b[i].beta);
        }
        CHECK(sample_initial_conditions(e, p, 100)[0].theta0 != a[0].theta0);
    }
    SUBCASE("theory mode momenta lie in one resonance period")
    {
        for (auto sampling : {BetaSampling::random, BetaSampling::stratified}) {
            const InitialEnsemble e{EnsembleMode::theory_uniform, 10000, 0.0, sampling};
            for (const auto& ic : sample_initial_conditions(e, p, 7)) {
                CHECK(ic.n0 == 0);
                CHECK(ic.J0 >= 2 * kPi);
                CHECK(ic.J0 < 2 * kPi + p.tau());
                CHECK(ic.J0 == doctest::Approx(2 * kPi + p.tau() * ic.beta));
            }
        }
    }
    SUBCASE("theory mode is uniform in theta and beta")
    {
        for (auto sampling : {BetaSampling::random, BetaSampling::stratified}) {
            const InitialEnsemble e{EnsembleMode::theory_uniform, 20000, 0.0, sampling};
            std::vector<double> theta, beta;
            for (const auto& ic : sample_initial_conditions(e, p, 11)) {
                theta.push_back(ic.theta0 / kTwoPi);
                beta.push_back(ic.beta);
            }
            CHECK(oracle::ks_uniform(theta) < oracle::ks_critical_1pct(theta.size()));
            CHECK(oracle::ks_uniform(beta) < oracle::ks_critical_1pct(beta.size()));
        }
    }
    SUBCASE("experiment mode width")
    {
        const InitialEnsemble e{EnsembleMode::experiment_gaussian, 100000, 8.0};
        std::vector<double> momenta;
        for (const auto& ic : sample_initial_conditions(e, p, 5)) {
            CHECK(ic.beta >= 0.0);
            CHECK(ic.beta < 1.0);
            momenta.push_back(ic.n0 + ic.beta);
        }
        CHECK(std::fabs(oracle::sample_std(momenta) / 8.0 - 1.0) < 0.03);
        CHECK(std::fabs(oracle::mean(momenta)) < 4 * 8.0 / std::sqrt(1e5));
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS((
            sample_initial_conditions({EnsembleMode::experiment_gaussian, 10, -1.0}, p, 1)),
            ParameterError);
        CHECK_THROWS_AS((sample_initial_conditions({EnsembleMode::theory_uniform, 0}, p, 1)),
                        ParameterError);
    }
}
