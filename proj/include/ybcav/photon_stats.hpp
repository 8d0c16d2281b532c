#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ybcav/cavity_model.hpp"
#include "ybcav/ion_model.hpp"
#include "ybcav/lindblad.hpp"
#include "ybcav/noise.hpp"
#include "ybcav/pulse.hpp"
#include "ybcav/rng.hpp"

namespace ybcav {

/// Collection and detection pipeline applied to emitted A photons:
/// Bernoulli thinning by the lumped efficiency, laser-leakage background
/// gated to readout windows, ungated detector dark counts, then a
/// non-paralyzing dead time on the merged time-ordered stream.
struct DetectionChain {
    double grating_efficiency = 0.25; // cavity photons routed to the fiber
    double splitter_fraction = 0.99;  // detector arm of the 99:1 splitter
    double detector_efficiency = 1.0;
    double extra_loss = 0.0;
    double background_rate_per_s = 0.0; // in-window leakage counts
    double dark_rate_per_s = 0.0;       // ungated dark counts
    double dead_time_s = 50e-9;

    double total_efficiency() const {
        return grating_efficiency * splitter_fraction * detector_efficiency *
               (1.0 - extra_loss);
    }
    void validate() const; // throws config_error
    bool operator==(const DetectionChain&) const = default;
};

/// Detection timestamps grouped by shot, each relative to its shot start,
/// sorted and within [0, repetition period).
struct PhotonRecord {
    double repetition_period_s = 0.0;
    std::vector<std::vector<double>> shot_times;

    std::size_t shot_count() const { return shot_times.size(); }
    std::vector<long> counts_per_period() const;
    std::vector<double> merged_times() const; // absolute timestamps
};

struct JumpOptions {
    double tol = 1e-10; // step tolerance for driven stretches
};

/// One stochastic unraveling of a pulse sequence (emission physics only;
/// the detection chain is applied by run_photon_shots).
struct TrajectoryResult {
    std::vector<double> emission_times_A; // within-shot, seconds
    int jumps_A = 0;
    int jumps_C = 0;
    int jumps_shelf = 0;
    int jumps_dephase = 0;
    Eigen::VectorXcd final_state;
};

/// Quantum-jump (Monte Carlo wave function) unraveling. Drive-free
/// stretches use closed-form amplitude decay with the jump time located by
/// root finding; driven stretches integrate the non-Hermitian Schroedinger
/// equation adaptively. `static_detuning_rad_s` is the spectral-diffusion
/// value frozen for this shot.
TrajectoryResult jump_trajectory(const LevelSystem& levels,
                                 const DecayRates& rates,
                                 const PulseSequence& sequence,
                                 const NoiseModel& noise,
                                 double static_detuning_rad_s,
                                 const std::string& initial_level,
                                 rng::Generator& gen,
                                 const JumpOptions& options = {});

/// Pulsed second-order correlation grouped by pulse-separation lag. The
/// zero-lag peak area is the second factorial moment sum n_i (n_i - 1)
/// (ordered pairs, matching the ordered side-peak pairs n_i * n_{i+m});
/// normalization is the mean side-peak area at lags >= far_lag_min, where
/// shot-to-shot correlations have died out.
struct G2Histogram {
    std::vector<int> lag;             // 0, 1, ..., max_lag (periods)
    std::vector<double> bin_left_s;   // lag bin edges in seconds
    std::vector<double> bin_right_s;
    std::vector<double> pairs;        // raw coincidence counts per lag
    std::vector<double> area;         // pairs per contributing period
    std::vector<double> normalized;   // area / far-lag mean
    std::vector<double> g2_error;     // Poisson: normalized / sqrt(pairs)
    double zero_lag = 0.0;            // normalized[0]
    double norm_area = 0.0;
};

G2Histogram g2_pulsed(const PhotonRecord& record, int max_lag,
                      int far_lag_min = 10);
G2Histogram g2_pulsed(const std::vector<long>& counts_per_period,
                      double period_s, int max_lag, int far_lag_min = 10);

/// One emitter in a photon-counting run. Its transition frequency offset
/// adds to the spectral-diffusion detuning; each emitter gets an
/// independent diffusion path.
struct EmitterSpec {
    DecayRates rates;
    double frequency_offset_rad_s = 0.0;
};

struct PhotonRunConfig {
    std::size_t shots = 100000;
    std::string initial_level = "g1"; // fresh initialization every shot
    DetectionChain chain;
    int max_lag = 30;
    int far_lag_min = 10;
    bool compute_g2 = true;
    JumpOptions jump;
};

struct PhotonRun {
    PhotonRecord record;
    G2Histogram g2;
    double mean_emitted_per_shot = 0.0; // A photons before detection
    double mean_detected_per_period = 0.0;
    long jumps_A = 0;
    long jumps_C = 0;
    long jumps_shelf = 0;
    long jumps_dephase = 0;
};

/// Runs `shots` independent shots of `sequence` (one per repetition period)
/// for each emitter, merges the emitted photons through the detection
/// chain, and groups detections by shot. Every randomized ingredient draws
/// from a seed derived from (master_seed, role, index), so results are
/// reproducible and independent of scheduling.
PhotonRun run_photon_shots(const LevelSystem& levels,
                           const std::vector<EmitterSpec>& emitters,
                           const PulseSequence& sequence,
                           const NoiseModel& noise,
                           const PhotonRunConfig& config,
                           std::uint64_t master_seed);

/// Readout-window intervals of one shot, relative to the shot start.
std::vector<std::pair<double, double>>
window_gates(const PulseSequence& sequence);

} // namespace ybcav
