#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "ybcav/cavity_model.hpp"
#include "ybcav/errors.hpp"
#include "ybcav/lindblad.hpp"
#include "ybcav/noise.hpp"
#include "ybcav/pulse.hpp"
#include "ybcav/rng.hpp"
#include "ybcav/units.hpp"

using namespace ybcav;

namespace {

struct Rig {
    LevelSystem levels;
    DecayRates rates;
    NoiseModel noise; // defaults: no noise
};

/// Full-strength cavity coupling (tau = 2.78 us).
Rig enhanced_rig() {
    Rig rig{LevelSystem::build({}), {}, {}};
    rig.rates = enhanced_decay(rig.levels, {}, {});
    return rig;
}

/// Decay slowed to nothing so drive dynamics are effectively unitary.
Rig unitary_rig() {
    LevelConfig cfg;
    cfg.gamma_bulk_per_s = 1e-4;
    Rig rig{LevelSystem::build(cfg), {}, {}};
    IonSite far;
    far.transverse_factor = 0.0;
    rig.rates = enhanced_decay(rig.levels, far, {});
    return rig;
}

double excited_pop(const Rig& rig, const Eigen::MatrixXcd& rho) {
    const int e = rig.levels.upper_index();
    return rho(e, e).real();
}

} // namespace

TEST_SUITE("lindblad") {

TEST_CASE("resonant Rabi oscillation matches sin^2(Omega t / 2)") {
    const Rig rig = unitary_rig();
    const double omega = units::two_pi * 10e6;
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    for (int i = 1; i <= 12; ++i) {
        const double t = i * 25e-9;
        PulseSequence seq;
        seq.drive("A", omega, t);
        const EvolveResult res =
            evolve(rho0, rig.levels, rig.rates, seq, rig.noise);
        const double expected = std::pow(std::sin(omega * t / 2.0), 2);
        CHECK(std::abs(excited_pop(rig, res.final_rho) - expected) < 1e-6);
    }
}

TEST_CASE("detuned Rabi oscillation matches the generalized formula") {
    const Rig rig = unitary_rig();
    const double omega = units::two_pi * 8e6;
    const double delta = units::two_pi * 6e6;
    const double omega_eff = std::hypot(omega, delta);
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    for (int i = 1; i <= 10; ++i) {
        const double t = i * 20e-9;
        PulseSequence seq;
        seq.drive("A", omega, t, 0.0, delta);
        const EvolveResult res =
            evolve(rho0, rig.levels, rig.rates, seq, rig.noise);
        const double expected = (omega * omega) / (omega_eff * omega_eff) *
                                std::pow(std::sin(omega_eff * t / 2.0), 2);
        CHECK(std::abs(excited_pop(rig, res.final_rho) - expected) < 1e-6);
    }
}

TEST_CASE("free decay follows exp(-Gamma t) with the right branching") {
    const Rig rig = enhanced_rig();
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "e0");
    const double tau = rig.rates.tau;

    PulseSequence seq;
    for (int i = 0; i < 8; ++i) seq.delay(tau / 2.0);
    const EvolveResult res =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise);
    REQUIRE(res.boundaries.size() == 8);
    for (std::size_t i = 0; i < res.boundaries.size(); ++i) {
        const double t = res.boundaries[i].t_s;
        const double expected = std::exp(-rig.rates.gamma_total * t);
        CHECK(std::abs(excited_pop(rig, res.boundaries[i].rho) - expected)
              < 1e-6);
    }

    // populations land on the channel fractions
    const double decayed =
        1.0 - std::exp(-rig.rates.gamma_total * res.final_time_s);
    const auto pop = [&](const char* name) {
        const int i = rig.levels.index_of(name);
        return res.final_rho(i, i).real();
    };
    const double g = rig.rates.gamma_total;
    CHECK(pop("g1") == doctest::Approx(rig.rates.rate_A / g * decayed)
                           .epsilon(1e-9));
    CHECK(pop("g0") == doctest::Approx(rig.rates.rate_C / g * decayed)
                           .epsilon(1e-9));
    CHECK(pop("gaux") == doctest::Approx(rig.rates.rate_aux / g * decayed)
                             .epsilon(1e-9));
}

TEST_CASE("trace and positivity are preserved through a full sequence") {
    const Rig rig = enhanced_rig();
    const double omega = units::two_pi * 100e6;
    PulseSequence seq;
    seq.half_pi_pulse("A", omega)
        .delay(100e-9)
        .pi_pulse("A", omega, units::pi / 2)
        .delay(100e-9)
        .half_pi_pulse("A", omega)
        .window(5.0 * rig.rates.tau);
    NoiseModel noise;
    noise.sigma_rad_s = 5e6;
    noise.gamma_phi_per_s = 6e6;
    const OuPath trace = sample_ou(noise, 1e-7, 200, 17);
    const EvolveResult res = evolve(pure_state(rig.levels, "g1"), rig.levels,
                                    rig.rates, seq, noise, &trace);
    CHECK(res.max_trace_error < 1e-9);
    CHECK(res.min_eigenvalue > -1e-9);
    CHECK(std::abs(res.final_rho.trace().real() - 1.0) < 1e-9);
}

TEST_CASE("emission integral equals the A-channel quantum yield") {
    const Rig rig = enhanced_rig();
    PulseSequence seq;
    seq.window(30.0 * rig.rates.tau);
    const EvolveResult res = evolve(pure_state(rig.levels, "e0"), rig.levels,
                                    rig.rates, seq, rig.noise);
    const double yield = rig.rates.rate_A / rig.rates.gamma_total;
    REQUIRE(res.window_emission_A.size() == 1);
    CHECK(res.total_emission_A == doctest::Approx(yield).epsilon(1e-6));
    CHECK(res.window_emission_A[0] ==
          doctest::Approx(res.total_emission_A).epsilon(1e-12));
}

TEST_CASE("window emission is additive over windows") {
    const Rig rig = enhanced_rig();
    const double tau = rig.rates.tau;
    PulseSequence split;
    split.window(tau).window(2.0 * tau);
    const EvolveResult a = evolve(pure_state(rig.levels, "e0"), rig.levels,
                                  rig.rates, split, rig.noise);
    PulseSequence whole;
    whole.window(3.0 * tau);
    const EvolveResult b = evolve(pure_state(rig.levels, "e0"), rig.levels,
                                  rig.rates, whole, rig.noise);
    REQUIRE(a.window_emission_A.size() == 2);
    CHECK(a.window_emission_A[0] + a.window_emission_A[1] ==
          doctest::Approx(b.total_emission_A).epsilon(1e-8));
}

TEST_CASE("Ramsey fringe accumulates the drive detuning during delays") {
    const Rig rig = unitary_rig();
    const double omega = units::two_pi * 500e6;
    const double delta = units::two_pi * 1e6;
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    const auto fringe = [&](double delay) {
        PulseSequence seq;
        seq.half_pi_pulse("A", omega, 0.0, delta)
            .delay(delay)
            .half_pi_pulse("A", omega, 0.0, delta);
        const EvolveResult res =
            evolve(rho0, rig.levels, rig.rates, seq, rig.noise);
        return excited_pop(rig, res.final_rho);
    };

    CHECK(fringe(0.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fringe(units::pi / delta) == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(fringe(units::two_pi / delta) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fringe(0.5 * units::pi / delta) ==
          doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("static detuning shifts the transition like a laser offset") {
    const Rig rig = unitary_rig();
    const double omega = units::two_pi * 500e6;
    const double delta_l = units::two_pi * 3e6;
    const double delta_n = units::two_pi * 1.2e6;
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    PulseSequence seq;
    seq.half_pi_pulse("A", omega, 0.0, delta_l)
        .delay(400e-9)
        .half_pi_pulse("A", omega, 0.0, delta_l);

    EvolveOptions opts;
    opts.static_detuning_rad_s = delta_n;
    const EvolveResult shifted =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise, nullptr, opts);

    PulseSequence equiv;
    equiv.half_pi_pulse("A", omega, 0.0, delta_l - delta_n)
        .delay(400e-9)
        .half_pi_pulse("A", omega, 0.0, delta_l - delta_n);
    const EvolveResult moved =
        evolve(rho0, rig.levels, rig.rates, equiv, rig.noise);

    CHECK(std::abs(excited_pop(rig, shifted.final_rho) -
                   excited_pop(rig, moved.final_rho)) < 1e-8);
}

TEST_CASE("a constant noise trace equals the static detuning") {
    const Rig rig = unitary_rig();
    const double omega = units::two_pi * 100e6;
    const double value = units::two_pi * 2e6;
    PulseSequence seq;
    seq.half_pi_pulse("A", omega).delay(300e-9).half_pi_pulse("A", omega);
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    OuPath flat;
    flat.dt_s = 1e-8;
    flat.values.assign(100, value);
    const EvolveResult traced =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise, &flat);

    EvolveOptions opts;
    opts.static_detuning_rad_s = value;
    const EvolveResult frozen =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise, nullptr, opts);

    CHECK(std::abs(excited_pop(rig, traced.final_rho) -
                   excited_pop(rig, frozen.final_rho)) < 1e-8);
}

TEST_CASE("pure dephasing decays the driven coherence at gamma_phi/2") {
    const Rig base = unitary_rig();
    NoiseModel noise;
    noise.gamma_phi_per_s = 4e6;
    const double omega = units::two_pi * 500e6;

    // prepare a superposition, free-evolve, read the coherence magnitude
    PulseSequence seq;
    seq.half_pi_pulse("A", omega).delay(500e-9);
    const EvolveResult res = evolve(pure_state(base.levels, "g1"), base.levels,
                                    base.rates, seq, noise);
    const int e = base.levels.upper_index();
    const int g = base.levels.lower_index_A();
    const double coherence = std::abs(res.final_rho(e, g));
    CHECK(coherence ==
          doctest::Approx(0.5 * std::exp(-noise.gamma_phi_per_s / 2.0 * 500e-9))
              .epsilon(1e-4));
}

TEST_CASE("halving the tolerance leaves the result unchanged") {
    const Rig rig = enhanced_rig();
    const double omega = units::two_pi * 100e6;
    PulseSequence seq;
    seq.half_pi_pulse("A", omega)
        .delay(200e-9)
        .half_pi_pulse("A", omega)
        .window(2.0 * rig.rates.tau);
    const Eigen::MatrixXcd rho0 = pure_state(rig.levels, "g1");

    EvolveOptions loose;
    loose.tol = 1e-8;
    EvolveOptions tight;
    tight.tol = 1e-10;
    const EvolveResult a =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise, nullptr, loose);
    const EvolveResult b =
        evolve(rho0, rig.levels, rig.rates, seq, rig.noise, nullptr, tight);
    CHECK(std::abs(excited_pop(rig, a.final_rho) -
                   excited_pop(rig, b.final_rho)) < 1e-6);
    CHECK(std::abs(a.total_emission_A - b.total_emission_A) < 1e-6);
    CHECK(b.steps_accepted >= a.steps_accepted);
}

TEST_CASE("state constructors") {
    const LevelSystem levels = LevelSystem::build({});
    const Eigen::MatrixXcd pure = pure_state(levels, "g0");
    CHECK(pure.trace().real() == doctest::Approx(1.0));
    CHECK(pure(levels.index_of("g0"), levels.index_of("g0")).real() ==
          doctest::Approx(1.0));

    const Eigen::MatrixXcd mixed =
        mixed_state(levels, {{"g0", 1.0}, {"g1", 1.0}, {"gaux", 2.0}});
    CHECK(mixed.trace().real() == doctest::Approx(1.0));
    CHECK(mixed(levels.index_of("gaux"), levels.index_of("gaux")).real() ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(mixed_state(levels, {{"g0", -0.1}}), config_error);
    CHECK_THROWS_AS(mixed_state(levels, {{"g0", 0.0}}), config_error);
    CHECK_THROWS_AS(pure_state(levels, "nope"), config_error);
}

TEST_CASE("average_over_noise reports mean and standard error") {
    const auto fn = [](std::size_t index, std::uint64_t seed) {
        CHECK(seed == rng::derive_seed(77, "avg-test", index));
        return static_cast<double>(index);
    };
    const NoiseAverage avg = average_over_noise(9, 77, "avg-test", fn);
    REQUIRE(avg.samples.size() == 9);
    CHECK(avg.mean == doctest::Approx(4.0));
    // sd of 0..8 is sqrt(60/8); se = sd/3
    CHECK(avg.std_error == doctest::Approx(std::sqrt(60.0 / 8.0) / 3.0));
}

} // TEST_SUITE
