#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ybcav/errors.hpp"
#include "ybcav/protocols.hpp"
#include "ybcav/units.hpp"

using namespace ybcav;

namespace {

SimSystem default_system() {
    return make_system({}, {}, {}, {}, {});
}

SimSystem markovian_system(double gamma_phi) {
    NoiseModel noise;
    noise.sigma_rad_s = 0.0;
    noise.gamma_phi_per_s = gamma_phi;
    return make_system({}, {}, {}, noise, {});
}

} // namespace

TEST_SUITE("protocols") {

TEST_CASE("make_system wires the decay rates") {
    const SimSystem sys = default_system();
    CHECK(sys.rates.tau == doctest::Approx(2.7793644314709277e-06));
    CHECK(sys.rates.f_eff == doctest::Approx(236.9128).epsilon(1e-6));
}

TEST_CASE("protocol config validation") {
    ProtocolConfig ok;
    CHECK_NOTHROW(ok.validate());
    ProtocolConfig bad;
    bad.shots = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.noise_samples = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.readout_pulses = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.ramsey_fit = "cubic";
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.ramsey_delays_s = {2e-9, 1e-9}; // must be increasing
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("lifetime fit recovers the enhanced decay time") {
    const SimSystem sys = default_system();
    ProtocolConfig cfg;
    cfg.shots = 20000;
    const ProtocolResult res = run_lifetime(sys, cfg, 31);
    REQUIRE(res.fit.converged);
    const double tau = res.derived.at("tau_s");
    const double err = res.derived.at("tau_err_s");
    CHECK(std::abs(tau - sys.rates.tau) < 4.0 * err);
    CHECK(err / tau < 0.05);
    CHECK(res.derived.at("gamma_per_s") == doctest::Approx(1.0 / tau));
    CHECK(res.curve.size() == 64);
    // histogram decays: first bin well above the last
    CHECK(res.curve.front().y > 10.0 * res.curve.back().y);
}

TEST_CASE("rabi readout train saturates at the cyclicity budget") {
    const SimSystem sys = default_system();
    ProtocolConfig cfg;
    const double period = units::two_pi / cfg.drive_rabi_rad_s;
    cfg.rabi_durations_s = {0.0, 0.25 * period, 0.5 * period, 0.75 * period,
                            period};
    const ProtocolResult res = run_rabi(sys, cfg, 7);
    REQUIRE(res.curve.size() == 5);
    // oscillation at the drive frequency: max at half period, near-zero at
    // zero and at the full period
    CHECK(res.curve[2].y > 1000.0);
    CHECK(res.curve[0].y == doctest::Approx(0.0));
    CHECK(res.curve[4].y < 0.01 * res.curve[2].y);
    // the reported budget is the bare cyclicity beta (1+F) / (1-beta)
    const double budget = res.derived.at("cyclicity_budget");
    CHECK(budget == doctest::Approx(transition_cyclicity(
                        sys.levels, sys.rates.f_eff)).epsilon(1e-9));
    // the train peak saturates at the N-pulse photon budget
    const double p = sys.rates.rate_A / sys.rates.gamma_total;
    const double train_budget =
        p * (1.0 - std::pow(p, cfg.readout_pulses)) / (1.0 - p);
    CHECK(res.derived.at("peak_emitted_per_train") ==
          doctest::Approx(train_budget).epsilon(0.02));
}

TEST_CASE("pump-probe counts peak on the C resonance") {
    const SimSystem sys = default_system();
    ProtocolConfig cfg;
    cfg.noise_samples = 4;
    cfg.pump_pulses = 10;
    const double f_c = sys.levels.transition("C").frequency_GHz;
    for (int i = -3; i <= 3; ++i) {
        cfg.pump_freq_GHz.push_back(f_c + i * 0.004);
    }
    const ProtocolResult res = run_pump_probe(sys, cfg, 41);
    REQUIRE(res.curve.size() == 7);
    const auto peak = std::max_element(
        res.curve.begin(), res.curve.end(),
        [](const CurvePoint& a, const CurvePoint& b) { return a.y < b.y; });
    CHECK(std::abs(peak->x - f_c) < 0.005);
    CHECK(res.derived.at("peak_freq_GHz") == doctest::Approx(peak->x));
    CHECK(res.derived.at("contrast_ratio") > 1.5);
    // edge of the scan: pumping is off-resonant, counts near baseline
    CHECK(res.curve.front().y < 0.7 * peak->y);
}

TEST_CASE("markovian ramsey and echo coincide at T2 = 2/gamma_phi") {
    const double gamma_phi = 2.0 / 330e-9;
    const SimSystem sys = markovian_system(gamma_phi);
    ProtocolConfig cfg;
    cfg.noise_samples = 4;
    cfg.ramsey_fit = "exponential";
    for (int i = 0; i < 17; ++i) {
        cfg.ramsey_delays_s.push_back(i * 660e-9 / 16);
        cfg.echo_delays_s.push_back(i * 660e-9 / 16);
    }
    const ProtocolResult ramsey = run_ramsey(sys, cfg, 43);
    const ProtocolResult echo = run_echo(sys, cfg, 43);

    CHECK(ramsey.derived.at("t2_star_s") ==
          doctest::Approx(330e-9).epsilon(0.03));
    CHECK(echo.derived.at("t2_s") == doctest::Approx(330e-9).epsilon(0.03));
    // no quasi-static component: the echo gains nothing
    CHECK(echo.derived.at("t2_s") ==
          doctest::Approx(ramsey.derived.at("t2_star_s")).epsilon(0.05));
    // full contrast at zero delay
    CHECK(ramsey.derived.at("contrast_at_zero") ==
          doctest::Approx(1.0).epsilon(0.05));
    CHECK(ramsey.derived.at("linewidth_MHz") ==
          doctest::Approx(1.0 / (units::pi * 330e-9) / 1e6).epsilon(0.05));
}

TEST_CASE("echo outlives ramsey under quasi-static noise") {
    NoiseModel noise;
    noise.sigma_rad_s = 2e7; // dominant slow component
    noise.tau_c_s = 1e-3;
    noise.gamma_phi_per_s = 4e6;
    const SimSystem sys = make_system({}, {}, {}, noise, {});
    ProtocolConfig cfg;
    cfg.noise_samples = 32;
    const double t2_star_exp = std::sqrt(2.0) / noise.sigma_rad_s;
    const double t2_exp = 2.0 / noise.gamma_phi_per_s;
    for (int i = 0; i < 13; ++i) {
        cfg.ramsey_delays_s.push_back(i * 2.0 * t2_star_exp / 12);
        cfg.echo_delays_s.push_back(i * 2.0 * t2_exp / 12);
    }
    const ProtocolResult ramsey = run_ramsey(sys, cfg, 47);
    const ProtocolResult echo = run_echo(sys, cfg, 47);
    CHECK(echo.derived.at("t2_s") > 2.0 * ramsey.derived.at("t2_star_s"));
    // the envelope must actually decay inside the scanned range
    CHECK(ramsey.curve.back().y < 0.4 * ramsey.curve.front().y);
}

TEST_CASE("markovian calibration returns sigma = 0") {
    const SimSystem sys = default_system();
    ProtocolConfig cfg;
    cfg.noise_samples = 4;
    CalibrationTargets targets;
    targets.t2_star_s = 300e-9;
    targets.t2_s = 300e-9; // equal: pure dephasing explains both
    CalibrationReport report;
    const NoiseModel model = calibrate_noise(sys, cfg, targets, 53, &report);
    CHECK(model.sigma_rad_s == 0.0);
    CHECK(model.gamma_phi_per_s ==
          doctest::Approx(2.0 / targets.t2_s).epsilon(0.15));
    CHECK(report.t2_sim_s == doctest::Approx(targets.t2_s).epsilon(0.10));
    CHECK(report.t2_star_sim_s ==
          doctest::Approx(targets.t2_star_s).epsilon(0.10));
    CHECK(report.iterations >= 1);
}

TEST_CASE("derived grids reject nonsense") {
    const SimSystem sys = default_system();
    ProtocolConfig cfg;
    cfg.ramsey_delays_s = {0.0}; // far too short to fit an envelope
    CHECK_THROWS_AS(run_ramsey(sys, cfg, 1), config_error);
    cfg = {};
    cfg.echo_delays_s = {0.0, 1e-9, 2e-9}; // still under the minimum
    CHECK_THROWS_AS(run_echo(sys, cfg, 1), config_error);
}

} // TEST_SUITE
