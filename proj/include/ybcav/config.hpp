#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ybcav/cavity_model.hpp"
#include "ybcav/ensemble.hpp"
#include "ybcav/ion_model.hpp"
#include "ybcav/noise.hpp"
#include "ybcav/photon_stats.hpp"
#include "ybcav/protocols.hpp"
#include "ybcav/pulse.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

/// Knobs for the correlation run: shots of [pi pulse, readout window] with
/// one or two emitters behind the same detection chain.
struct G2Config {
    std::size_t shots = 100000;
    std::size_t max_lag = 30;
    std::size_t far_lag_min = 10; // normalization band start
    int emitters = 1;
    double emitter_offset_MHz = 0.0; // detuning of the second emitter
    double pulse_rabi_rad_s = units::two_pi * 100e6;
    double pulse_detuning_rad_s = 0.0;
    double window_s = 0.0; // 0 = five lifetimes
    std::string initial_level = "g1";

    void validate() const;
    bool operator==(const G2Config&) const = default;
};

struct ReflectionConfig {
    double coupling_ratio = 0.35; // kappa_ext / kappa_total, placeholder
    double span_GHz = 300.0;      // scan width centered on the resonance
    int points = 801;

    void validate() const;
    bool operator==(const ReflectionConfig&) const = default;
};

struct BraggConfig {
    double n_high = 3.48;      // GaAs near 984 nm
    double n_low = 1.0;        // air holes
    double lambda0_nm = 984.5; // design wavelength
    int n_left = 12;
    int n_right = 23;
    int taper_periods = 20;
    double span_nm = 1200.0; // scan width centered on lambda0
    int grid_points = 2001;

    void validate() const;
    bool operator==(const BraggConfig&) const = default;
};

/// Everything a run needs, grouped by module. Parsed from JSON with
/// defaults applied; unknown keys are rejected so typos cannot silently
/// fall back to defaults.
struct RunConfig {
    LevelConfig levels;
    CavityMode cavity;
    IonSite site;
    NoiseModel noise;
    DetectionChain chain;
    ProtocolConfig protocol;
    EnsembleConfig ensemble;
    G2Config g2;
    ReflectionConfig reflection;
    BraggConfig bragg;
    CalibrationTargets calibration;
    std::uint64_t master_seed = 1;
    std::string out_dir = ".";

    /// One entry per leaf field recording whether the value came from the
    /// file or a default, and where the default comes from:
    /// "device" (measured or simulated on the reference device),
    /// "derived" (computed from device values), "placeholder" (no source,
    /// order-of-magnitude choice), "plumbing" (runtime knob).
    struct AuditEntry {
        std::string field;
        std::string provenance;
        std::string value;
        bool defaulted = true;
    };
    std::vector<AuditEntry> audit;

    void validate_all() const; // every block, throws config_error
    bool equivalent(const RunConfig& other) const; // ignores audit
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Fully resolved configuration as pretty JSON; re-parsing it yields an
/// equivalent RunConfig.
std::string resolved_config_json(const RunConfig& config);

} // namespace ybcav
