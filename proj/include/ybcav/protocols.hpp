#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ybcav/cavity_model.hpp"
#include "ybcav/fit.hpp"
#include "ybcav/ion_model.hpp"
#include "ybcav/lindblad.hpp"
#include "ybcav/noise.hpp"
#include "ybcav/photon_stats.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

/// Everything a measurement protocol needs about the device under test.
struct SimSystem {
    LevelSystem levels;
    CavityMode cavity;
    IonSite site;
    NoiseModel noise;
    DetectionChain chain;
    DecayRates rates; // enhanced_decay(levels, site, cavity)
};

SimSystem make_system(const LevelConfig& levels, const CavityMode& cavity,
                      const IonSite& site, const NoiseModel& noise,
                      const DetectionChain& chain);

/// Knobs shared by the measurement protocols. Pulse powers are not
/// reported in the source experiments; the drive defaults below are chosen
/// so pulses stay much shorter than the coherence times under study.
struct ProtocolConfig {
    int readout_pulses = 50;             // pulses per Rabi readout train
    double repetition_period_s = 20e-6;  // 50 kHz shot clock
    std::size_t shots = 20000;           // photon-counting shots
    std::size_t noise_samples = 256;     // spectral-diffusion averages
    double drive_rabi_rad_s = units::two_pi * 100e6;
    double ramsey_detuning_rad_s = units::two_pi * 10e6;
    double pump_rabi_rad_s = units::two_pi * 2e6;
    int pump_pulses = 30;
    std::string ramsey_fit = "gaussian";     // or "exponential"
    std::string echo_fit = "exponential";    // or "gaussian"
    std::string initial_level = "g1";
    double lifetime_window_s = 0.0;          // 0 = 5 tau
    int lifetime_bin_count = 64;
    std::vector<double> rabi_durations_s;    // empty = derived grid
    std::vector<double> ramsey_delays_s;
    std::vector<double> echo_delays_s;
    std::vector<double> pump_freq_GHz;

    void validate() const; // throws config_error
    bool operator==(const ProtocolConfig&) const = default;
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double err = 0.0;
};

/// Uniform protocol output: a curve, an optional fit, and named derived
/// quantities for the run summary.
struct ProtocolResult {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<CurvePoint> curve;
    FitResult fit;
    std::map<std::string, double> derived;
};

/// Time-resolved photoluminescence after a pi-pulse, photon-counted with
/// quantum-jump shots; exponential fit recovers the enhanced lifetime.
ProtocolResult run_lifetime(const SimSystem& system, const ProtocolConfig& cfg,
                            std::uint64_t seed);

/// Pump pulses scanned across the C transition followed by a fixed probe
/// on A. Counts peak when the pump is resonant: population collects in the
/// A ground state at the branching-ratio fixed point.
ProtocolResult run_pump_probe(const SimSystem& system,
                              const ProtocolConfig& cfg, std::uint64_t seed);

/// Readout train of `readout_pulses` pulses of variable duration after
/// initialization into g1. Counts oscillate at the Rabi rate with a
/// flat-top envelope once the train exhausts the cyclicity photon budget.
ProtocolResult run_rabi(const SimSystem& system, const ProtocolConfig& cfg,
                        std::uint64_t seed);

/// Two pi/2 pulses separated by tau; fringe contrast vs tau from a
/// four-phase quadrature readout, averaged over spectral diffusion.
/// The fitted 1/e contrast delay is T2*.
ProtocolResult run_ramsey(const SimSystem& system, const ProtocolConfig& cfg,
                          std::uint64_t seed);

/// pi/2 - tau/2 - pi - tau/2 - pi/2; the fitted 1/e contrast delay is T2.
ProtocolResult run_echo(const SimSystem& system, const ProtocolConfig& cfg,
                        std::uint64_t seed);

struct CalibrationTargets {
    double t2_star_s = 69e-9;
    double t2_s = 330e-9;
    double tau_c_s = 1e-3; // held fixed
    double tolerance = 0.10;
    int max_iterations = 8;

    bool operator==(const CalibrationTargets&) const = default;
};

struct CalibrationReport {
    int iterations = 0;
    double t2_star_sim_s = 0.0;
    double t2_sim_s = 0.0;
    NoiseModel model;
};

/// Two-parameter fixed-point search: sigma from the Ramsey envelope
/// (quasi-static T2* = sqrt(2)/sigma), gamma_phi from the echo decay
/// (T2 = 2/gamma_phi), each updated by the ratio of simulated to target
/// value until both land within `tolerance`. With T2 = T2* the
/// Markovian branch (sigma = 0) is selected. Throws numerical_error after
/// max_iterations without convergence.
NoiseModel calibrate_noise(const SimSystem& system, const ProtocolConfig& cfg,
                           const CalibrationTargets& targets,
                           std::uint64_t seed,
                           CalibrationReport* report = nullptr);

} // namespace ybcav
